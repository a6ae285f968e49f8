"""Activity-based bound propagation over linear rows."""

from __future__ import annotations

import numpy as np

from ..milp.system import Compiled

INT_TOL = 1e-6


class Propagator:
    def __init__(self, comp: Compiled):
        coo = comp.A.tocoo()
        self.r = coo.row.astype(np.int64)
        self.j = coo.col.astype(np.int64)
        self.a = coo.data.astype(float)
        self.m, self.n = comp.A.shape
        self.lo = comp.row_lo
        self.hi = comp.row_hi
        self.integral = comp.integral

    def _activity(self, lo_part, part_inf):
        fin = np.bincount(self.r, weights=np.where(part_inf, 0.0, lo_part), minlength=self.m)
        cnt = np.bincount(self.r, weights=part_inf.astype(float), minlength=self.m)
        return fin, cnt

    def run(self, lb: np.ndarray, ub: np.ndarray, max_rounds: int = 25):
        """Tighten (lb, ub) in place copies; returns (lb, ub, feasible)."""
        lb = lb.copy()
        ub = ub.copy()
        a, r, j = self.a, self.r, self.j
        pos = a > 0
        for _ in range(max_rounds):
            with np.errstate(invalid="ignore"):
                cmin = np.where(pos, a * lb[j], a * ub[j])
                cmax = np.where(pos, a * ub[j], a * lb[j])
            imin = ~np.isfinite(cmin)
            imax = ~np.isfinite(cmax)
            fmin, nmin = self._activity(cmin, imin)
            fmax, nmax = self._activity(cmax, imax)
            tol = 1e-7 * (1.0 + np.abs(self.hi[np.isfinite(self.hi)]).max(initial=0.0))
            if np.any((nmin == 0) & (fmin > self.hi + tol)) or \
               np.any((nmax == 0) & (fmax < self.lo - tol)):
                return lb, ub, False
            # residual activity of each row without the entry's own contribution
            rmin = np.where(imin, np.where(nmin[r] == 1, fmin[r], np.nan),
                            np.where(nmin[r] == 0, fmin[r] - np.where(imin, 0, cmin), np.nan))
            rmax = np.where(imax, np.where(nmax[r] == 1, fmax[r], np.nan),
                            np.where(nmax[r] == 0, fmax[r] - np.where(imax, 0, cmax), np.nan))
            with np.errstate(invalid="ignore", divide="ignore"):
                from_hi = (self.hi[r] - rmin) / a  # a x_j <= hi - rmin
                from_lo = (self.lo[r] - rmax) / a  # a x_j >= lo - rmax
            new_ub = np.full(self.n, np.inf)
            new_lb = np.full(self.n, -np.inf)
            ok = np.isfinite(from_hi)
            np.minimum.at(new_ub, j[ok & pos], from_hi[ok & pos])
            np.maximum.at(new_lb, j[ok & ~pos], from_hi[ok & ~pos])
            ok = np.isfinite(from_lo)
            np.maximum.at(new_lb, j[ok & pos], from_lo[ok & pos])
            np.minimum.at(new_ub, j[ok & ~pos], from_lo[ok & ~pos])
            iv = self.integral
            new_ub[iv] = np.floor(new_ub[iv] + INT_TOL)
            new_lb[iv] = np.ceil(new_lb[iv] - INT_TOL)
            scale = 1e-6 * (1.0 + np.abs(np.where(np.isfinite(ub), ub, 0.0)))
            tighter_ub = new_ub < ub - scale
            tighter_lb = new_lb > lb + scale
            if not (tighter_ub.any() or tighter_lb.any()):
                break
            ub = np.where(tighter_ub, new_ub, ub)
            lb = np.where(tighter_lb, new_lb, lb)
            if np.any(lb > ub + 1e-9):
                return lb, ub, False
        return lb, ub, True

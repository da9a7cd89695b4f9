"""Pointwise tensor calculus in the invariant orthonormal frame.

For a diagonal metric g = f^2 du^2 + a^2 s1^2 + b^2 s2^2 + c^2 s3^2 with
coframe e0 = f du, e1 = a s1, e2 = b s2, e3 = c s3 (ds1 = -2 s2^s3 cyclic),
the Levi-Civita connection closes on a small table of rotation coefficients:

    nabla_{e1} e0 = A e1,  A = a'/(f a)          (B, C cyclic)
    nabla_{e1} e2 = -g1 e3, nabla_{e2} e3 = -g2 e1, nabla_{e3} e1 = -g3 e2
    g1 = (a^2-b^2-c^2)/(abc)  (cyclic), plus antisymmetric partners.

Everything in this module is algebra in the channel values (w, w', w'') of the
sqrt-coefficients w = (f, a, b, c) and, for tensors, (k, k', k'').  No finite
differencing happens here; derivatives of connection coefficients are expanded
by the product rule so that operators built from different expansions agree to
roundoff.  Evaluation excludes the bolt node u = 0 (the frame is singular
there); callers fill it by parity.

Index conventions, all verified against a coordinate-chart oracle in tests:
    riemann[a,b,c,d] = < R(e_a,e_b) e_c , e_d >,
    ricci[i,j] = sum_a riemann[a,i,j,a],
    rm_action(k)[i,j] = sum_{m,n} riemann[i,m,n,j] k[m,n]  (= Ric for k = g).
"""

from __future__ import annotations

import numpy as np

# cyclic structure: (i, j, k) with s_i pairing s_j, s_k
_CYCLES = ((1, 2, 3), (2, 3, 1), (3, 1, 2))


class Frame:
    """Frame data of one diagonal metric on the interior nodes.

    Parameters are the sqrt-coefficient channels, each of shape (4, M):
    w = (f, a, b, c) sampled on nodes u[1:], wp and wpp their u-derivatives.
    """

    def __init__(self, w, wp, wpp):
        self.w = np.asarray(w, dtype=float)
        self.wp = np.asarray(wp, dtype=float)
        self.wpp = np.asarray(wpp, dtype=float)
        if self.w.shape[0] != 4:
            raise ValueError("expected 4 sqrt-coefficients")
        self.m = self.w.shape[1]
        self._cache = {}

    # -- connection --------------------------------------------------------

    def _rot(self):
        """Rotation coefficients (A1,A2,A3) and (g1,g2,g3) with u-derivatives."""
        if "rot" in self._cache:
            return self._cache["rot"]
        f = self.w[0]
        fp = self.wp[0]
        A = np.empty((3, self.m))
        dA = np.empty((3, self.m))
        for i in (1, 2, 3):
            x, xp, xpp = self.w[i], self.wp[i], self.wpp[i]
            A[i - 1] = xp / (f * x)
            dA[i - 1] = xpp / (f * x) - A[i - 1] * fp / f - A[i - 1] ** 2 * f
        G = np.empty((3, self.m))
        dG = np.empty((3, self.m))
        a, b, c = self.w[1], self.w[2], self.w[3]
        ap, bp, cp = self.wp[1], self.wp[2], self.wp[3]
        abc = a * b * c
        dabc = ap * b * c + a * bp * c + a * b * cp
        for idx, (i, j, k) in enumerate(_CYCLES):
            x, y, z = self.w[i], self.w[j], self.w[k]
            xp, yp, zp = self.wp[i], self.wp[j], self.wp[k]
            num = x * x - y * y - z * z
            dnum = 2 * (x * xp - y * yp - z * zp)
            G[idx] = num / abc
            dG[idx] = (dnum * abc - num * dabc) / abc ** 2
        self._cache["rot"] = (A, dA, G, dG)
        return self._cache["rot"]

    @property
    def gam(self):
        """gam[m, j, i]: coefficient of e_i in nabla_{e_m} e_j, shape (4,4,4,M)."""
        if "gam" not in self._cache:
            self._cache["gam"] = self._gam_table(derivative=False)
        return self._cache["gam"]

    @property
    def dgam_du(self):
        """u-derivative of every gam entry (same layout)."""
        if "dgam" not in self._cache:
            self._cache["dgam"] = self._gam_table(derivative=True)
        return self._cache["dgam"]

    def _gam_table(self, derivative):
        A, dA, G, dG = self._rot()
        src_A = dA if derivative else A
        src_G = dG if derivative else G
        t = np.zeros((4, 4, 4, self.m))
        for i in (1, 2, 3):
            t[i, 0, i] += src_A[i - 1]
            t[i, i, 0] -= src_A[i - 1]
        for idx, (i, j, k) in enumerate(_CYCLES):
            # nabla_{e_i} e_j = -g_i e_k, nabla_{e_i} e_k = +g_i e_j
            t[i, j, k] -= src_G[idx]
            t[i, k, j] += src_G[idx]
        return t

    @property
    def struct(self):
        """struct[m, a, b]: e_m-coefficient of [e_a, e_b]."""
        if "struct" not in self._cache:
            g = self.gam
            self._cache["struct"] = np.einsum("abm...->mab...", g) - np.einsum(
                "bam...->mab...", g
            )
        return self._cache["struct"]

    # -- curvature ----------------------------------------------------------

    @property
    def riemann(self):
        if "riem" in self._cache:
            return self._cache["riem"]
        gam = self.gam
        e0gam = self.dgam_du / self.w[0]
        term2 = np.einsum("bcm...,aml...->abcl...", gam, gam)
        cc = self.struct
        term3 = np.einsum("mab...,mcl...->abcl...", cc, gam)
        riem = term2 - np.einsum("abcl...->bacl...", term2) - term3
        riem[0] += e0gam
        riem -= np.einsum("abcd...->bacd...", np.concatenate(
            (e0gam[None], np.zeros((3,) + e0gam.shape)), axis=0))
        self._cache["riem"] = riem
        return riem

    @property
    def ricci(self):
        if "ric" not in self._cache:
            self._cache["ric"] = np.einsum("aija...->ij...", self.riemann)
        return self._cache["ric"]

    @property
    def ricci_diag(self):
        return np.einsum("ii...->i...", self.ricci)

    @property
    def scal(self):
        return np.einsum("ii...->...", self.ricci)

    def rm_action(self, k):
        """Rm(k)_{ij} = R_{imnj} k^{mn} for full frame components k (4,4,M)."""
        return np.einsum("imnj...,mn...->ij...", self.riemann, k)

    # -- covariant derivatives ---------------------------------------------

    def cov_rank2(self, k, kp):
        """(nabla k)[m, i, j] for a rank-2 tensor with component channels k, kp."""
        t = np.zeros((4,) + k.shape)
        t[0] = kp / self.w[0]
        t -= np.einsum("mis...,sj...->mij...", self.gam, k)
        t -= np.einsum("mjs...,is...->mij...", self.gam, k)
        return t

    def cov_rank2_du(self, k, kp, kpp):
        """u-derivative of the components of cov_rank2 (exact product rule)."""
        f, fp = self.w[0], self.wp[0]
        t = np.zeros((4,) + k.shape)
        t[0] = kpp / f - kp * fp / f ** 2
        t -= np.einsum("mis...,sj...->mij...", self.dgam_du, k)
        t -= np.einsum("mis...,sj...->mij...", self.gam, kp)
        t -= np.einsum("mjs...,is...->mij...", self.dgam_du, k)
        t -= np.einsum("mjs...,is...->mij...", self.gam, kp)
        return t

    def cov_rank3(self, t, tp):
        """(nabla T)[x, m, i, j] for a rank-3 tensor with channels t, tp."""
        out = np.zeros((4,) + t.shape)
        out[0] = tp / self.w[0]
        out -= np.einsum("xms...,sij...->xmij...", self.gam, t)
        out -= np.einsum("xis...,msj...->xmij...", self.gam, t)
        out -= np.einsum("xjs...,mis...->xmij...", self.gam, t)
        return out

    def second_cov(self, k, kp, kpp):
        """(nabla^2 k)[x, m, i, j] = nabla_x nabla_m k_{ij}."""
        t = self.cov_rank2(k, kp)
        tp = self.cov_rank2_du(k, kp, kpp)
        return self.cov_rank3(t, tp)

    # -- derived operators ---------------------------------------------------

    def rough_laplacian(self, k, kp, kpp):
        """nabla* nabla k = - sum_a (nabla^2 k)[a, a] (nonnegative convention)."""
        h2 = self.second_cov(k, kp, kpp)
        return -np.einsum("aaij...->ij...", h2)

    def lichnerowicz(self, k, kp, kpp):
        return self.rough_laplacian(k, kp, kpp) - 2.0 * self.rm_action(k)

    def scalar_laplacian(self, phi, phip, phipp):
        """Nonnegative Laplacian on radial functions: -(1/(f J)) d/du (J/f phi')."""
        f, a, b, c = self.w
        fp, ap, bp, cp = self.wp
        J = a * b * c
        dJ = ap * b * c + a * bp * c + a * b * cp
        jof = J / f
        djof = dJ / f - J * fp / f ** 2
        return -(djof * phip + jof * phipp) / (f * J)

    def grad_norm2(self, phip):
        """|d phi|_g^2 for a radial function."""
        return (phip / self.w[0]) ** 2


def diag_to_full(kdiag):
    """Embed diagonal frame components (4, M) as a full (4, 4, M) tensor."""
    out = np.zeros((4,) + kdiag.shape)
    for i in range(4):
        out[i, i] = kdiag[i]
    return out


def diag_part(kfull, check=None, rtol=1e-9):
    """Extract the diagonal; optionally assert off-diagonal entries vanish."""
    d = np.einsum("ii...->i...", kfull)
    if check:
        off = kfull.copy()
        for i in range(4):
            off[i, i] = 0.0
        scale = np.max(np.abs(kfull)) + 1e-300
        if np.max(np.abs(off)) > rtol * scale:
            raise AssertionError(
                f"{check}: ansatz closure violated, off-diagonal "
                f"{np.max(np.abs(off)):.3e} vs scale {scale:.3e}")
    return d


def tensor_norm2(t):
    """Pointwise squared frame norm, summing all component axes but the last."""
    axes = tuple(range(t.ndim - 1))
    return np.sum(t * t, axis=axes)


class MixedFrame:
    """Operators mixing a background metric h with a second metric g that is
    diagonal in the same coframe.  Components are taken in h's orthonormal
    frame; G[i] = (w_g[i]/w_h[i])^2 are the frame components of g.
    """

    def __init__(self, frame_h, G, Gp):
        self.h = frame_h
        self.G = np.asarray(G, dtype=float)
        self.Gp = np.asarray(Gp, dtype=float)

    def mixed_lichnerowicz(self, k, kp, kpp):
        """Delta_{L,g,h} k from the modified-Laplacian expansion."""
        h2 = self.h.second_cov(k, kp, kpp)
        out = -np.einsum("a...,aaij...->ij...", 1.0 / self.G, h2)
        out -= self._mixed_curvature(k)
        return out

    def _mixed_curvature(self, k):
        riem = self.h.riemann
        s = np.einsum("a...,ab...,jabi...->ij...", 1.0 / self.G, k, riem)
        t = np.einsum("i...,ij...->ij...", self.G, s)
        return t + np.einsum("ij...->ji...", t)

    def mixed_curvature_source(self, k):
        """F5-type term: the curvature part moved to the right-hand side."""
        return self._mixed_curvature(k)

    def gradient_quadratic(self, t1):
        """F1(g^{-1}, g^{-1}, nabla k, nabla k) from nabla k components t1."""
        iG = 1.0 / self.G
        # t1[m, i, j] = nabla_m k_{ij}; all contractions use g^{-1} = diag(1/G)
        f1 = 0.5 * np.einsum("a...,p...,ipa...,jpa...->ij...", iG, iG, t1, t1)
        f1 += np.einsum("a...,p...,ajp...,pia...->ij...", iG, iG, t1, t1)
        f1 -= np.einsum("a...,p...,ajp...,aip...->ij...", iG, iG, t1, t1)
        f1 += np.einsum("a...,p...,jpa...,aip...->ij...", iG, iG, t1, t1)
        f1 += np.einsum("a...,p...,ipa...,ajp...->ij...", iG, iG, t1, t1)
        return f1

    def gradient_quadratic_extra(self, t1):
        """The extra divergence remainder g^{ap} g^{bq} nabla_a k_{pq} nabla_b k_{ij}."""
        iG = 1.0 / self.G
        v = np.einsum("a...,b...,aab...->b...", iG, iG, t1)
        return np.einsum("b...,bij...->ij...", v, t1)

    def divergence_form(self, k, kp, kpp):
        """nabla_a ((g^{ab} - h^{ab}) nabla_b k_{ij}), expanded exactly."""
        W = 1.0 / self.G - 1.0
        Wp = -self.Gp / self.G ** 2
        h2 = self.h.second_cov(k, kp, kpp)
        out = np.einsum("a...,aaij...->ij...", W, h2)
        t1 = self.h.cov_rank2(k, kp)
        Wfull = diag_to_full(W)
        Wfullp = diag_to_full(Wp)
        covW = self.h.cov_rank2(Wfull, Wfullp)
        divW = np.einsum("aab...->b...", covW)
        out += np.einsum("b...,bij...->ij...", divW, t1)
        return out

"""
Weighted light-ray transform: assembly, forward map and regularized inversion.

For a source q, an angular profile Phi and a decay mu, the limit of the
normalized pairing is the integral over the cone of rays leaving q of

    Phi(theta) exp(-mu (r + t)) [chi(r + t)^2] p~(r, theta, t)  dr dtheta dt,

with p~ = r^(-1/2) X and X = exp(-gamma t / 2) p, r in travel-time units.
"""

import logging

import numpy as np
import pandas as pd
from scipy import linalg, sparse

from jmgtlab.errors import ArgumentError, HypothesisViolationError, RegularizationError
from jmgtlab.models.grid import Grid
from jmgtlab.models.measurement import MeasurementMode
from jmgtlab.models.probe import AngularProfile, Cutoff, ProbeGeometry, ProfileKind
from jmgtlab.models.ray_system import (
    BasisAxes,
    RayTransformSystem,
    ReconstructedField,
    SourceSamples,
    inside_domain,
)

logger = logging.getLogger(__name__)


def profiles_for(
    geom: ProbeGeometry, n_profiles: int, kind: ProfileKind | str = ProfileKind.VON_MISES
) -> list[AngularProfile]:
    """``n_profiles`` bumps (or ray windows) tiling the cone of rays that meets the domain."""
    kind = ProfileKind(kind)
    if kind == ProfileKind.CONSTANT:
        return [AngularProfile()]
    span = geom.theta_span
    width = span / n_profiles
    centers = geom.theta_center + span * ((np.arange(n_profiles) + 0.5) / n_profiles - 0.5)
    return [AngularProfile(kind, float(c), width) for c in centers]


def source_samples(
    geom: ProbeGeometry,
    grid: Grid,
    profiles: list[AngularProfile],
    n_r: int = 32,
    n_t: int = 32,
) -> SourceSamples:
    """Midpoint samples over the source's cone, radial range and [0, T]."""
    theta = geom.theta_samples
    d_theta = geom.theta_span / theta.size
    near, far = geom.radial_range()
    r_edges = np.linspace(near, far, n_r + 1)
    t_edges = np.linspace(0.0, grid.t_final, n_t + 1)
    samples = SourceSamples(
        geometry=geom,
        theta=theta,
        r=0.5 * (r_edges[1:] + r_edges[:-1]),
        t=0.5 * (t_edges[1:] + t_edges[:-1]),
        weight=float(d_theta * (r_edges[1] - r_edges[0]) * (t_edges[1] - t_edges[0])),
        profiles=profiles,
        cutoff=Cutoff.for_geometry(geom),
        inside=np.zeros((theta.size, n_r), dtype=bool),
    )
    x, y = samples.points()
    samples.inside = inside_domain(x, y, grid)
    return samples


def _evaluation_matrix(samples: SourceSamples, basis: BasisAxes) -> sparse.csr_matrix:
    """r^(-1/2) X at every sample, zero outside the closed domain -> (n_samples, basis.size)."""
    x, y = samples.points()
    t = np.broadcast_to(samples.t, samples.shape)
    x = np.broadcast_to(x[:, :, None], t.shape)
    y = np.broadcast_to(y[:, :, None], t.shape)
    weight = np.broadcast_to((samples.inside * samples.r[None, :] ** -0.5)[:, :, None], t.shape)
    return sparse.diags(weight.ravel()) @ basis.interpolation_matrix(x, y, t)


def _project(kernel: np.ndarray, evaluation: sparse.csr_matrix) -> np.ndarray:
    """kernel @ evaluation as a dense array."""
    return np.asarray((evaluation.T @ kernel.T).T)


def _kernel(samples: SourceSamples, mus: np.ndarray, mode: MeasurementMode) -> np.ndarray:
    """Rows (profile, mu) over flattened (theta, r, t) samples."""
    s = samples.r[:, None] + samples.t[None, :]
    decay = np.exp(-mus[:, None, None] * s[None])  # (mu, r, t)
    phi = np.stack([profile.value(samples.theta) for profile in samples.profiles])
    base = samples.weight * phi[:, None, :, None, None] * decay[None, :, None, :, :]
    if mode == MeasurementMode.B_T:
        base = base * samples.cutoff.value(s)[None, None, None] ** 2
    n_rows = len(samples.profiles) * mus.size
    return base.reshape(n_rows, -1)


def build_ray_system(
    geometries: list[ProbeGeometry],
    mus,
    grid: Grid,
    mode: MeasurementMode | str = MeasurementMode.LAMBDA_T,
    n_profiles: int = 8,
    profile_kind: ProfileKind | str = ProfileKind.VON_MISES,
    basis_shape: tuple[int, int, int] = (8, 8, 8),
    n_r: int = 32,
    n_t: int = 32,
) -> RayTransformSystem:
    """
    Assemble the forward matrix on a trilinear (x, y, t) basis.

    Samples outside the closed domain contribute nothing (p is extended by zero).
    """
    mode = MeasurementMode(mode)
    mus = np.asarray(mus, dtype=float)
    if np.any(mus < 0.0):
        raise ArgumentError("decay rates mu must be non-negative")
    basis = BasisAxes.covering(grid, basis_shape)

    sources, blocks, labels = [], [], []
    for index, geom in enumerate(geometries):
        samples = source_samples(geom, grid, profiles_for(geom, n_profiles, profile_kind), n_r, n_t)
        kernel = _kernel(samples, mus, mode)
        blocks.append(_project(kernel, _evaluation_matrix(samples, basis)))
        sources.append(samples)
        for j in range(len(samples.profiles)):
            for mu in mus:
                labels.append({"q": index, "profile": j, "mu": float(mu)})
        logger.debug("ray system: source %d with %d rows", index, kernel.shape[0])

    matrix = np.vstack(blocks) if blocks else np.zeros((0, basis.size))
    return RayTransformSystem(
        sources=sources,
        mus=mus,
        mode=mode,
        basis=basis,
        matrix=matrix,
        rows=pd.DataFrame(labels, columns=["q", "profile", "mu"]),
        support_start=[samples.cutoff.end for samples in sources],
    )


def ray_forward(p_tilde, system: RayTransformSystem) -> np.ndarray:
    """
    Data vector of weighted ray integrals of p~ given on each source's samples.

    ``p_tilde`` is a sequence (one (n_theta, n_r, n_t) array per source) or an
    array stacking them.

    Raises:
        HypothesisViolationError: B_T mode with p~ nonzero at r + t below T* + 2 pad
    """
    if len(p_tilde) != len(system.sources):
        raise ArgumentError(
            f"expected samples for {len(system.sources)} sources, got {len(p_tilde)}"
        )
    out = []
    for samples, values, start in zip(system.sources, p_tilde, system.support_start):
        values = np.asarray(values)
        if values.shape != samples.shape:
            raise ArgumentError(f"samples have shape {values.shape}, expected {samples.shape}")
        if system.mode == MeasurementMode.B_T:
            early = (samples.r[:, None] + samples.t[None, :]) < start
            if np.any(values[:, early] != 0.0):
                raise HypothesisViolationError(
                    f"p~ is supported before r + t = {start:.4g} for a boundary-only measurement"
                )
        out.append(_kernel(samples, system.mus, system.mode) @ values.ravel())
    return np.concatenate(out) if out else np.zeros(0)


def sample_field(field_fn, system: RayTransformSystem) -> list[np.ndarray]:
    """p~ = r^(-1/2) X on every source's samples, X given as a function of (x, y, t)."""
    out = []
    for samples in system.sources:
        x, y = samples.points()
        values = field_fn(x[:, :, None], y[:, :, None], samples.t[None, None, :])
        values = np.broadcast_to(values, samples.shape)
        weight = (samples.inside * samples.r[None, :] ** -0.5)[:, :, None]
        out.append(values * weight)
    return out


# ------------------------------------------------------------------- inversion


def _regularizer(shape: tuple[int, int, int], order: int) -> sparse.csr_matrix:
    n = int(np.prod(shape))
    if order == 0:
        return sparse.identity(n, format="csr")
    if order != 1:
        raise ArgumentError(f"regularization order must be 0 or 1, got {order}")
    eyes = [sparse.identity(k) for k in shape]
    blocks = []
    for axis, k in enumerate(shape):
        diff = sparse.diags([-np.ones(k - 1), np.ones(k - 1)], [0, 1], shape=(k - 1, k))
        factors = eyes.copy()
        factors[axis] = diff
        blocks.append(sparse.kron(sparse.kron(factors[0], factors[1]), factors[2]))
    return sparse.vstack(blocks, format="csr")


def _is_identity(regularizer: sparse.spmatrix | None, n: int) -> bool:
    if regularizer is None:
        return True
    if regularizer.shape != (n, n):
        return False
    return (sparse.csr_matrix(regularizer) != sparse.identity(n, format="csr")).nnz == 0


def tikhonov_solve(
    matrix: np.ndarray,
    data: np.ndarray,
    lam: float,
    regularizer: sparse.spmatrix | None = None,
) -> tuple[np.ndarray, float]:
    """
    Real minimizer of |A x - d|^2 + lam' |R x|^2 for complex d.

    For real x the imaginary part of d only adds a constant, so the fit runs
    against Re d; the reported residual keeps the full complex misfit.

    lam' = lam * trace(A^T A) / n, so ``lam`` is relative to the mean column
    energy. With R = I and fewer rows than unknowns the minimizer is taken in
    the row space, x = A^T (A A^T + lam' I)^-1 Re d. Returns (x, relative residual).

    Raises:
        RegularizationError: lam = 0 on an underdetermined or rank-deficient system
    """
    matrix = np.asarray(matrix, dtype=float)
    data = np.asarray(data, dtype=complex)
    n_rows, n = matrix.shape
    if lam > 0.0 and n_rows < n and _is_identity(regularizer, n):
        scale = float(np.sum(matrix**2)) / n
        gram = matrix @ matrix.T + lam * scale * np.eye(n_rows)
        solution = matrix.T @ linalg.solve(gram, data.real, assume_a="pos")
        rank = n
    else:
        stacked = [matrix]
        rhs = [data.real]
        if lam > 0.0:
            reg = sparse.identity(n) if regularizer is None else regularizer
            scale = float(np.sum(matrix**2)) / n
            stacked.append(np.sqrt(lam * scale) * reg.toarray())
            rhs.append(np.zeros(reg.shape[0]))
        elif n_rows < n:
            raise RegularizationError(f"{n_rows} rows for {n} unknowns needs lam > 0")
        solution, _, rank, _ = linalg.lstsq(np.vstack(stacked), np.concatenate(rhs))

    if lam == 0.0 and rank < n:
        raise RegularizationError(f"system has rank {rank} < {n}; lam must be positive")
    norm = np.linalg.norm(data)
    misfit = np.linalg.norm(matrix @ solution - data)
    return solution, float(misfit / norm) if norm > 0.0 else float(misfit)


def _s_bins(system: RayTransformSystem, n_bins: int) -> np.ndarray:
    s_min = min(float(src.r[0] + src.t[0]) for src in system.sources)
    s_max = max(float(src.r[-1] + src.t[-1]) for src in system.sources)
    return np.linspace(s_min, s_max + 1e-9, n_bins + 1)


def _laplace_matrix(mus: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """K[m, j] = int over bin j of exp(-mu_m s) ds."""
    a, b = edges[:-1][None, :], edges[1:][None, :]
    mu = mus[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (np.exp(-mu * a) - np.exp(-mu * b)) / mu
    return np.where(mu > 0.0, exact, b - a)


def _line_integral_matrix(system: RayTransformSystem, edges: np.ndarray) -> np.ndarray:
    """Rows (source, profile, bin): bin averages of Phi [chi^2] r^(-1/2) X over s = r + t."""
    basis, blocks = system.basis, []
    widths = np.diff(edges)
    for samples in system.sources:
        n_theta, n_r, n_t = samples.shape
        s = samples.r[:, None] + samples.t[None, :]
        weight = np.ones_like(s)
        if system.mode == MeasurementMode.B_T:
            weight = samples.cutoff.value(s) ** 2
        bin_of = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, widths.size - 1)
        phi = np.stack([profile.value(samples.theta) for profile in samples.profiles])
        rows = np.zeros((len(samples.profiles), widths.size, n_theta, n_r, n_t))
        for j in range(widths.size):
            in_bin = (bin_of == j) * weight / widths[j]
            rows[:, j] = samples.weight * phi[:, :, None, None] * in_bin[None, None]
        kernel = rows.reshape(len(samples.profiles) * widths.size, -1)
        blocks.append(_project(kernel, _evaluation_matrix(samples, basis)))
    return np.vstack(blocks)


def ray_invert(
    data: np.ndarray,
    system: RayTransformSystem,
    lam: float = 1e-6,
    order: int = 0,
    method: str = "tikhonov",
    n_bins: int | None = None,
) -> ReconstructedField:
    """
    Regularized least-squares inverse of the forward matrix.

    ``tikhonov`` solves the full system at once. ``two_stage`` first unmixes the
    mu-dependence of every (source, profile) group into bin averages of the
    line integrals over s = r + t, then solves the line-integral system.
    """
    data = np.asarray(data, dtype=complex)
    if data.size != system.n_rows:
        raise ArgumentError(f"data has {data.size} entries, system has {system.n_rows} rows")
    regularizer = _regularizer(system.basis.shape, order)

    if method == "tikhonov":
        coefficients, residual = tikhonov_solve(system.matrix, data, lam, regularizer)
    elif method == "two_stage":
        n_bins = n_bins or max(system.mus.size // 2, 2)
        edges = _s_bins(system, n_bins)
        laplace = _laplace_matrix(system.mus, edges)
        groups = data.reshape(-1, system.mus.size)
        lines = np.concatenate([_unmix(laplace, group, lam) for group in groups])
        lines_matrix = _line_integral_matrix(system, edges)
        coefficients, _ = tikhonov_solve(lines_matrix, lines, lam, regularizer)
        misfit = np.linalg.norm(system.matrix @ coefficients - data)
        norm = np.linalg.norm(data)
        residual = float(misfit / norm) if norm > 0.0 else float(misfit)
    else:
        raise ArgumentError(f"unknown inversion method: {method!r}")

    field = ReconstructedField(
        coefficients=coefficients,
        basis=system.basis,
        covered=system.covered(),
        residual=residual,
        lam=lam,
        method=method,
    )
    logger.info(
        "%s inversion: residual %.3e, coverage %.1f%%",
        method,
        residual,
        100.0 * field.coverage_fraction,
    )
    return field


def _unmix(laplace: np.ndarray, values: np.ndarray, lam: float) -> np.ndarray:
    """Complex bin averages G with laplace @ G ~ values (Tikhonov, order 0)."""
    n = laplace.shape[1]
    scale = float(np.sum(laplace**2)) / n
    stacked = np.vstack([laplace, np.sqrt(max(lam, 1e-12) * scale) * np.eye(n)])
    rhs = np.concatenate([values, np.zeros(n)])
    solution, *_ = linalg.lstsq(stacked, rhs)
    return solution


def select_lambda_lcurve(
    data: np.ndarray,
    system: RayTransformSystem,
    lams=None,
    order: int = 0,
) -> tuple[float, pd.DataFrame]:
    """
    Pick lam at the point of maximum curvature of the log-log L-curve.

    Returns:
        (lam, DataFrame with lam, residual_norm, solution_norm, curvature)
    """
    lams = np.logspace(-10, 0, 21) if lams is None else np.asarray(lams, dtype=float)
    if lams.size < 3 or np.any(lams <= 0.0):
        raise ArgumentError("the L-curve needs at least three positive lam values")
    regularizer = _regularizer(system.basis.shape, order)
    data = np.asarray(data, dtype=complex)

    residuals, norms = [], []
    for lam in lams:
        x, _ = tikhonov_solve(system.matrix, data, float(lam), regularizer)
        residuals.append(np.linalg.norm(system.matrix @ x - data.real))
        norms.append(np.linalg.norm(regularizer @ x))

    tiny = np.finfo(float).tiny
    rho = np.log(np.maximum(residuals, tiny))
    eta = np.log(np.maximum(norms, tiny))
    log_lam = np.log(lams)
    d_rho, d_eta = np.gradient(rho, log_lam), np.gradient(eta, log_lam)
    dd_rho, dd_eta = np.gradient(d_rho, log_lam), np.gradient(d_eta, log_lam)
    denominator = np.maximum((d_rho**2 + d_eta**2) ** 1.5, tiny)
    curvature = (d_rho * dd_eta - dd_rho * d_eta) / denominator

    best = int(np.argmax(curvature[1:-1])) + 1
    table = pd.DataFrame(
        {
            "lam": lams,
            "residual_norm": residuals,
            "solution_norm": norms,
            "curvature": curvature,
        }
    )
    logger.info("L-curve picked lam = %.3e", lams[best])
    return float(lams[best]), table


def recover_p(
    p_tilde: np.ndarray,
    a0: np.ndarray,
    gamma: float,
    times: np.ndarray,
    coverage: np.ndarray | None = None,
) -> np.ma.MaskedArray:
    """
    p = exp(gamma t) p~ / a0 on (nt + 1, ...) arrays.

    Nodes whose interpolated coverage indicator is below one are masked as
    unreconstructed.
    """
    p_tilde = np.asarray(p_tilde)
    a0 = np.asarray(a0)
    if np.any(a0 == 0.0):
        raise ArgumentError(
            "the adjoint amplitude vanishes; the source must lie outside the domain"
        )
    growth = np.exp(gamma * np.asarray(times)).reshape((-1,) + (1,) * (p_tilde.ndim - 1))
    values = growth * p_tilde / a0
    mask = np.zeros(values.shape, dtype=bool)
    if coverage is not None:
        mask = np.asarray(coverage) < 1.0 - 1e-12
    return np.ma.masked_array(values, mask=mask)

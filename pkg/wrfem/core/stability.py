"""
Discrete stability analysis of 1D schemes.

Interior rows of an assembled uniform-mesh system are read as difference
equations, Z-transformed into polynomial matrices, and reduced to the
transfer function between the primary field and the source. Polynomials
use ascending coefficients: (c[n-1], c[n], c[n+1]) -> c0 + c1 Z + c2 Z^2.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from wrfem.core.errors import StabilityError
from wrfem.core.mesh import build_line_mesh
from wrfem.core.problems1d import Mc1dConfig, Transport1dConfig, assemble_mc1d, assemble_transport1d
from wrfem.core.weakforms import Formulation

logger = logging.getLogger(__name__)

INVARIANCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Stencil:
    """
    Normalized interior difference equations.

    Attributes:
        pe (float): Element Peclet number.
        formulation (Formulation): Scheme.
        fields (Tuple[str, ...]): Unknown fields; the first is the primary one.
        coefficients (Dict[str, Dict[str, np.ndarray]]): Row field -> column field -> triplet.
        source (Dict[str, np.ndarray]): Row field -> source triplet.
    """
    pe: float
    formulation: Formulation
    fields: Tuple[str, ...]
    coefficients: Dict[str, Dict[str, np.ndarray]]
    source: Dict[str, np.ndarray]

    def row(self, name: str) -> Dict[str, np.ndarray]:
        return self.coefficients[name]


@dataclass(frozen=True, eq=False)
class StencilTF:
    """
    Rational transfer function primary/source in Z.

    Attributes:
        pe (float): Element Peclet number.
        num (np.ndarray): Ascending numerator coefficients.
        den (np.ndarray): Ascending denominator coefficients.
        poles (np.ndarray): Denominator roots.
        zeros (np.ndarray): Numerator roots.
        n_fields (int): Number of coupled fields the function was reduced from.
        cancelled (Tuple[Tuple[complex, complex], ...]): (pole, zero) pairs removed by a reduction.
    """
    pe: float
    num: np.ndarray
    den: np.ndarray
    poles: np.ndarray
    zeros: np.ndarray
    n_fields: int = 1
    cancelled: Tuple[Tuple[complex, complex], ...] = ()

    def __call__(self, z: complex) -> complex:
        return P.polyval(z, self.num) / P.polyval(z, self.den)


@dataclass(frozen=True)
class StabilityEntry:
    """Classification of one Peclet sample."""
    pe: float
    poles: Tuple[complex, ...]
    effective_poles: Tuple[complex, ...]
    cancelled: Tuple[Tuple[complex, complex], ...]
    oscillatory: bool

    @property
    def verdict(self) -> str:
        return "oscillatory" if self.oscillatory else "non-oscillatory"


@dataclass
class StabilityReport:
    """
    Pole trajectories and verdicts over a Peclet sweep.

    Attributes:
        formulation (Formulation): Scheme analyzed.
        entries (List[StabilityEntry]): One entry per Pe sample, in input order.
        cancel_tol (float): Relative pole/zero distance treated as cancellation.
    """
    formulation: Formulation
    entries: List[StabilityEntry] = field(default_factory=list)
    cancel_tol: float = 0.05

    @property
    def stable(self) -> bool:
        return not any(e.oscillatory for e in self.entries)

    def trajectories(self) -> Dict[float, Tuple[complex, ...]]:
        return {e.pe: e.poles for e in self.entries}


def _trim(poly: np.ndarray, rel: float = 1e-13) -> np.ndarray:
    poly = np.asarray(poly, dtype=float)
    scale = np.abs(poly).max() if poly.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(poly) > rel * scale)[0]
    return poly[:keep[-1] + 1]


def polynomial_roots(poly: np.ndarray, unit_tol: float = 1e-9) -> np.ndarray:
    """
    Roots of an ascending polynomial via companion-matrix eigenvalues.

    Roots at Z = 1 are deflated exactly first, since double roots there are
    ill-conditioned for eigenvalue solvers.

    Args:
        poly (np.ndarray): Ascending coefficients.
        unit_tol (float): Relative tolerance for detecting a root at 1.

    Returns:
        np.ndarray: Complex roots sorted by (real, imag).
    """
    poly = _trim(poly)
    roots: List[complex] = []
    while poly.size > 1 and abs(P.polyval(1.0, poly)) <= unit_tol * np.abs(poly).sum():
        poly, _ = P.polydiv(poly, [-1.0, 1.0])
        poly = _trim(poly)
        roots.append(1.0 + 0.0j)
    if poly.size > 1:
        roots.extend(np.asarray(P.polyroots(poly), dtype=complex).tolist())
    out = np.array(roots, dtype=complex)
    return out[np.lexsort((out.imag, out.real))] if out.size else out


def _read_rows(matrix, source, layout, nodes: Sequence[int], h: float,
               fields: Tuple[str, ...]) -> Tuple[Dict[str, Dict[str, np.ndarray]], Dict[str, np.ndarray]]:
    coefficients: Dict[str, Dict[str, np.ndarray]] = {}
    sources: Dict[str, np.ndarray] = {}
    primary = fields[0]
    for row_field in fields:
        samples = []
        for m in nodes:
            dof = layout.dofs(m, row_field)
            dense = matrix[[dof], :].toarray().ravel()
            src = source[[dof], :].toarray().ravel()
            entry = {}
            for col_field in fields:
                cols = layout.dofs(np.array([m - 1, m, m + 1]), col_field)
                trip = dense[cols].copy()
                dense[cols] = 0.0
                # auxiliary unknowns and the source are scaled by h
                entry[col_field] = trip if col_field == primary else trip / h
            entry["source"] = src[[m - 1, m, m + 1]] / h
            src[[m - 1, m, m + 1]] = 0.0
            if np.abs(dense).max() > 0 or np.abs(src).max() > 0:
                raise StabilityError(f"Row {row_field}[{m}] couples beyond nearest neighbours")
            samples.append(entry)
        ref = samples[0]
        scale = max(max(np.abs(v).max() for v in ref.values()), 1e-300)
        for other in samples[1:]:
            for key, trip in ref.items():
                if np.abs(other[key] - trip).max() > INVARIANCE_TOL * scale:
                    raise StabilityError(f"Row {row_field} is not translation invariant (non-uniform mesh?)")
        centre = ref[row_field][1]
        if centre == 0:
            raise StabilityError(f"Row {row_field} has no diagonal coefficient")
        norm = 2.0 / centre
        coefficients[row_field] = {f: ref[f] * norm for f in fields}
        sources[row_field] = ref["source"] * norm
    return coefficients, sources


def extract_stencil(formulation, pe: float, n_elems: int = 10,
                    problem: str = "moving_conductor") -> Stencil:
    """
    Read normalized interior stencils from an assembled uniform system.

    Args:
        formulation: Scheme (Formulation or its name).
        pe (float): Element Peclet number (>= 0).
        n_elems (int): Elements of the stencil mesh (>= 6).
        problem (str): "moving_conductor" or "transport".

    Returns:
        Stencil: Coefficients scaled so every row's own centre coefficient is 2.

    Raises:
        StabilityError: If rows are not translation invariant.
    """
    formulation = Formulation.parse(formulation)
    if n_elems < 6:
        raise StabilityError(f"Stencil extraction needs at least 6 elements, got {n_elems}")
    if pe < 0:
        raise StabilityError(f"Peclet number must be >= 0, got {pe}")
    h = 1.0 / n_elems
    speed = 2.0 * pe / h
    mesh = build_line_mesh(n_elems, 0.0, 1.0)
    if problem == "moving_conductor":
        cfg = Mc1dConfig(mu_sigma_u=speed, n_elems=n_elems, formulation=formulation, source="interpolated")
        assembled = assemble_mc1d(cfg, mesh, nodal_source=np.zeros(mesh.n_nodes))
    elif problem == "transport":
        cfg = Transport1dConfig(u_over_k=speed, n_elems=n_elems, formulation=formulation)
        assembled = assemble_transport1d(cfg, mesh)
    else:
        raise StabilityError(f"Unknown problem '{problem}'")
    fields = assembled.layout.fields
    mid = n_elems // 2
    nodes = [mid - 1, mid, mid + 1]
    coefficients, sources = _read_rows(assembled.system.matrix, assembled.source_matrix,
                                       assembled.layout, nodes, h, fields)
    logger.debug(f"Extracted {formulation.value} stencil at Pe={pe:g}")
    return Stencil(pe=pe, formulation=formulation, fields=fields,
                   coefficients=coefficients, source=sources)


def transfer_function(stencil: Stencil) -> StencilTF:
    """
    Eliminate auxiliary fields and form primary/source in Z.

    For a coupled pair the auxiliary field is solved from the first row and
    substituted into the second.

    Args:
        stencil (Stencil): Normalized stencils.

    Returns:
        StencilTF: Numerator, denominator, poles and zeros.

    Raises:
        StabilityError: If the denominator vanishes identically.
    """
    f = stencil.fields
    if len(f) == 1:
        num = stencil.source[f[0]]
        den = stencil.coefficients[f[0]][f[0]]
    elif len(f) == 2:
        p11 = stencil.coefficients[f[0]][f[0]]
        p12 = stencil.coefficients[f[0]][f[1]]
        p21 = stencil.coefficients[f[1]][f[0]]
        p22 = stencil.coefficients[f[1]][f[1]]
        q1 = stencil.source[f[0]]
        q2 = stencil.source[f[1]]
        # aux = (q1 B - p11 A) / p12, substituted into p21 A + p22 aux = q2 B
        num = P.polysub(P.polymul(q2, p12), P.polymul(p22, q1))
        den = P.polysub(P.polymul(p21, p12), P.polymul(p22, p11))
        if not np.any(p12):
            # uncoupled primary row
            num, den = q1, p11
    else:
        raise StabilityError(f"Cannot eliminate {len(f)} coupled fields")
    den = _trim(den)
    if not np.any(den):
        raise StabilityError(f"Denominator vanishes identically at Pe={stencil.pe}")
    num = _trim(num)
    zeros = polynomial_roots(num) if np.any(num) else np.zeros(0, dtype=complex)
    return StencilTF(pe=stencil.pe, num=num, den=den, poles=polynomial_roots(den), zeros=zeros,
                     n_fields=len(f))


def determinant_poles(stencil: Stencil, samples: int = 16) -> np.ndarray:
    """
    Poles from the numeric 2x2 Z-domain determinant.

    The determinant is evaluated at roots of unity and interpolated by FFT,
    independently of the polynomial elimination in `transfer_function`.

    Args:
        stencil (Stencil): Normalized stencils.
        samples (int): Number of evaluation points (> polynomial degree).

    Returns:
        np.ndarray: Sorted poles.
    """
    f = stencil.fields
    z = np.exp(2j * np.pi * np.arange(samples) / samples)

    def ev(trip):
        return P.polyval(z, trip)

    if len(f) == 1:
        det = ev(stencil.coefficients[f[0]][f[0]])
    else:
        c = stencil.coefficients
        det = ev(c[f[0]][f[0]]) * ev(c[f[1]][f[1]]) - ev(c[f[0]][f[1]]) * ev(c[f[1]][f[0]])
        if not np.any(c[f[0]][f[1]]):
            det = ev(c[f[0]][f[0]])
    coeffs = np.fft.fft(det).real / samples
    return polynomial_roots(coeffs)


def _cancel(poles: np.ndarray, zeros: np.ndarray, tol: float):
    remaining = list(poles)
    pairs = []
    for zero in zeros:
        if abs(zero - 1.0) < 1e-12:
            continue
        best = None
        for i, pole in enumerate(remaining):
            if abs(pole - zero) <= tol * max(abs(zero), 1e-12):
                if best is None or abs(pole - zero) < abs(remaining[best] - zero):
                    best = i
        if best is not None:
            pairs.append((remaining.pop(best), zero))
    return remaining, pairs


@dataclass(frozen=True, eq=False)
class PecletExpansion:
    """
    Coupled-pair transfer function written as polynomials in Pe.

    Attributes:
        num (Tuple[np.ndarray, ...]): Z-polynomial multiplying Pe^k in the numerator, by k.
        den (Tuple[np.ndarray, ...]): Same for the denominator.
    """
    num: Tuple[np.ndarray, ...]
    den: Tuple[np.ndarray, ...]

    @staticmethod
    def dominant(terms: Tuple[np.ndarray, ...], pe: float) -> np.ndarray:
        """The Pe^k term with the largest coefficient magnitude at this Pe."""
        weights = [np.abs(t).max() * pe ** k for k, t in enumerate(terms)]
        return terms[int(np.argmax(weights))]


def _affine_mul(a: Tuple[np.ndarray, np.ndarray], b: Tuple[np.ndarray, np.ndarray]) -> List[np.ndarray]:
    return [P.polymul(a[0], b[0]), P.polyadd(P.polymul(a[0], b[1]), P.polymul(a[1], b[0])),
            P.polymul(a[1], b[1])]


def expand_peclet(formulation, n_elems: int = 10, problem: str = "moving_conductor",
                  samples: Sequence[float] = (1.0, 2.0, 3.0)) -> Optional[PecletExpansion]:
    """
    Expand a coupled pair's numerator and denominator in powers of Pe.

    Stencils are read at three Pe samples; every triplet must be affine in Pe.

    Args:
        formulation: Scheme (Formulation or its name).
        n_elems (int): Elements of the stencil mesh.
        problem (str): "moving_conductor" or "transport".
        samples (Sequence[float]): Three distinct, equally spaced Pe values.

    Returns:
        Optional[PecletExpansion]: None for single-field or non-affine stencils.
    """
    stencils = [extract_stencil(formulation, pe, n_elems=n_elems, problem=problem) for pe in samples]
    f = stencils[0].fields
    if len(f) != 2:
        return None
    step = samples[1] - samples[0]

    def affine(get) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        c0, c1, c2 = (np.asarray(get(s), dtype=float) for s in stencils)
        slope = (c1 - c0) / step
        const = c0 - samples[0] * slope
        if np.abs(const + samples[2] * slope - c2).max() > 1e-9 * max(np.abs(c2).max(), 1.0):
            return None
        return const, slope

    parts = {
        "p11": affine(lambda s: s.coefficients[f[0]][f[0]]),
        "p12": affine(lambda s: s.coefficients[f[0]][f[1]]),
        "p21": affine(lambda s: s.coefficients[f[1]][f[0]]),
        "p22": affine(lambda s: s.coefficients[f[1]][f[1]]),
        "q1": affine(lambda s: s.source[f[0]]),
        "q2": affine(lambda s: s.source[f[1]]),
    }
    if any(v is None for v in parts.values()):
        logger.debug(f"{Formulation.parse(formulation).value} stencil is not affine in Pe")
        return None
    num = [P.polysub(a, b) for a, b in zip(_affine_mul(parts["q2"], parts["p12"]),
                                           _affine_mul(parts["p22"], parts["q1"]))]
    den = [P.polysub(a, b) for a, b in zip(_affine_mul(parts["p21"], parts["p12"]),
                                           _affine_mul(parts["p22"], parts["p11"]))]
    return PecletExpansion(num=tuple(_trim(t) for t in num), den=tuple(_trim(t) for t in den))


def reduced_tf(expansion: PecletExpansion, pe: float, cancel_tol: float = 0.05) -> StencilTF:
    """
    Dominant-balance transfer function of a coupled pair at one Pe.

    The numerator and denominator each keep their dominant Pe^k term. Pole and
    zero pairs within `cancel_tol` (relative) cancel, except at Z = 1. The
    result is scaled to a monic numerator, so at large Pe the weighted-residual
    pair reduces to (Z^2 - 1) / (2 (Z^2 - 2Z + 1)).

    Args:
        expansion (PecletExpansion): Pe expansion of the pair.
        pe (float): Element Peclet number.
        cancel_tol (float): Relative cancellation distance.

    Returns:
        StencilTF: Reduced function; `cancelled` holds the removed (pole, zero) pairs.

    Raises:
        StabilityError: If the dominant denominator vanishes.
    """
    num = _trim(expansion.dominant(expansion.num, pe))
    den = _trim(expansion.dominant(expansion.den, pe))
    if not np.any(den):
        raise StabilityError(f"Denominator vanishes identically at Pe={pe}")
    poles = polynomial_roots(den)
    if not np.any(num):
        return StencilTF(pe=pe, num=num, den=den, poles=poles, zeros=np.zeros(0, dtype=complex), n_fields=2)
    zeros = polynomial_roots(num)
    remaining, pairs = _cancel(poles, zeros, cancel_tol)
    kept = list(zeros)
    for _, zero in pairs:
        kept.remove(zero)
    new_num = np.real(P.polyfromroots(kept)) if kept else np.ones(1)
    new_den = np.real(P.polyfromroots(remaining)) if remaining else np.ones(1)
    new_den = new_den * den[-1] / num[-1]
    return StencilTF(pe=pe, num=new_num, den=new_den, poles=np.array(remaining, dtype=complex),
                     zeros=np.array(kept, dtype=complex), n_fields=2, cancelled=tuple(pairs))


def effective_tf(formulation, pe: float, cancel_tol: float = 0.05, problem: str = "moving_conductor",
                 n_elems: int = 10) -> StencilTF:
    """Reduced function for coupled pairs, the exact one for single-field schemes."""
    expansion = expand_peclet(formulation, n_elems=n_elems, problem=problem)
    if expansion is not None:
        return reduced_tf(expansion, pe, cancel_tol)
    return transfer_function(extract_stencil(formulation, pe, n_elems=n_elems, problem=problem))


def classify(tfs: Sequence[StencilTF], formulation=Formulation.WEIGHTED_RESIDUAL,
             cancel_tol: float = 0.05, reduced: Optional[Sequence[StencilTF]] = None) -> StabilityReport:
    """
    Classify transfer functions as oscillatory or not.

    A scheme is non-oscillatory at a sample when every effective pole is real
    and non-negative. Effective poles come from `reduced` when given (one per
    sample, see `reduced_tf`). Otherwise coupled stencils cancel auxiliary
    poles lying within `cancel_tol` (relative) of a numerator zero, and
    single-field stencils use their poles as they are.

    Args:
        tfs (Sequence[StencilTF]): One exact transfer function per Pe sample.
        formulation: Scheme the functions came from.
        cancel_tol (float): Relative cancellation distance.
        reduced (Optional[Sequence[StencilTF]]): Reduced functions, aligned with `tfs`.

    Returns:
        StabilityReport: Per-sample verdicts and exact pole trajectories.
    """
    if reduced is not None and len(reduced) != len(tfs):
        raise StabilityError(f"{len(reduced)} reduced functions for {len(tfs)} samples")
    report = StabilityReport(formulation=Formulation.parse(formulation), cancel_tol=cancel_tol)
    for i, tf in enumerate(tfs):
        if reduced is not None:
            remaining, pairs = list(reduced[i].poles), list(reduced[i].cancelled)
        elif tf.n_fields > 1:
            remaining, pairs = _cancel(tf.poles, tf.zeros, cancel_tol)
        else:
            remaining, pairs = list(tf.poles), []
        oscillatory = any(abs(p.imag) > 1e-9 * max(1.0, abs(p)) or p.real < 0 for p in remaining)
        report.entries.append(StabilityEntry(
            pe=tf.pe, poles=tuple(tf.poles.tolist()), effective_poles=tuple(remaining),
            cancelled=tuple(pairs), oscillatory=oscillatory))
    return report


def analyze(formulation, pe_values: Sequence[float], cancel_tol: float = 0.05,
            problem: str = "moving_conductor", n_elems: int = 10) -> StabilityReport:
    """Extract, reduce and classify the scheme over a Pe sweep."""
    formulation = Formulation.parse(formulation)
    tfs = [transfer_function(extract_stencil(formulation, pe, n_elems=n_elems, problem=problem)) for pe in pe_values]
    reduced = None
    if any(tf.n_fields > 1 for tf in tfs):
        expansion = expand_peclet(formulation, n_elems=n_elems, problem=problem)
        if expansion is not None:
            reduced = [reduced_tf(expansion, pe, cancel_tol) for pe in pe_values]
    report = classify(tfs, formulation, cancel_tol, reduced)
    logger.info(f"Stability sweep of {formulation.value}: {len(report.entries)} samples, "
                f"{'stable' if report.stable else 'oscillatory samples present'}")
    return report


def format_polynomial(coeffs: np.ndarray, digits: int = 4) -> str:
    """Ascending coefficients as a readable polynomial in Z."""
    terms = []
    for power, c in enumerate(np.real_if_close(np.asarray(coeffs))):
        c = float(np.real(c))
        if abs(c) < 10.0 ** -digits:
            continue
        value = f"{c:.{digits}g}"
        terms.append(value if power == 0 else f"{value} Z" if power == 1 else f"{value} Z^{power}")
    return " + ".join(terms).replace("+ -", "- ") if terms else "0"


def format_tf(tf: StencilTF, digits: int = 4) -> str:
    """Render a transfer function as (numerator) / (denominator)."""
    return f"({format_polynomial(tf.num, digits)}) / ({format_polynomial(tf.den, digits)})"


def galerkin_pole(pe: float) -> float:
    """Non-unit characteristic root (1 + Pe) / (1 - Pe) of the Galerkin scheme."""
    if pe == 1.0:
        return float("inf")
    return (1.0 + pe) / (1.0 - pe)


def sweep_rows(report: StabilityReport) -> List[List[object]]:
    """CSV rows (Pe, pole_1, ..., verdict) of a stability report."""
    width = max((len(e.poles) for e in report.entries), default=0)
    rows = []
    for e in report.entries:
        poles = [f"{p.real:.12g}{p.imag:+.12g}j" for p in e.poles]
        rows.append([f"{e.pe:.12g}"] + poles + [""] * (width - len(poles)) + [e.verdict])
    return rows


def stability_header(report: StabilityReport) -> List[str]:
    width = max((len(e.poles) for e in report.entries), default=0)
    return ["pe"] + [f"pole_{i + 1}" for i in range(width)] + ["verdict"]


def default_pe_grid(n: int = 25, lo: float = 0.1, hi: float = 1e4) -> np.ndarray:
    """Logarithmic Pe samples."""
    return np.logspace(np.log10(lo), np.log10(hi), n)



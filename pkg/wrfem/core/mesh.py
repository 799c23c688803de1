"""
Structured line, quadrilateral and hexahedral meshes, shape functions and
Gauss quadrature.

All meshes are tensor products of (optionally graded) axis coordinates,
except the cylindrical hexahedral mesh, which maps a structured
z x r x theta block onto Cartesian coordinates around a square core.
"""
import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from wrfem.core.errors import MeshError, QuadratureError, SamplingError

logger = logging.getLogger(__name__)

RegionFn = Callable[[np.ndarray], np.ndarray]


class ElementKind(enum.Enum):
    """Supported element kinds."""
    LINE2 = "line2"
    QUAD4 = "quad4"
    HEX8 = "hex8"

    @property
    def dim(self) -> int:
        return {"line2": 1, "quad4": 2, "hex8": 3}[self.value]

    @property
    def n_nodes(self) -> int:
        return 2 ** self.dim

    @property
    def reference_volume(self) -> float:
        return 2.0 ** self.dim


_REFERENCE_NODES = {
    ElementKind.LINE2: np.array([[-1.0], [1.0]]),
    ElementKind.QUAD4: np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
    ElementKind.HEX8: np.array([
        [-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0],
    ]),
}


def reference_nodes(kind: ElementKind) -> np.ndarray:
    """
    Get the local coordinates of the element's nodes.

    Args:
        kind (ElementKind): Element kind.

    Returns:
        np.ndarray: (n_nodes, dim) array of corner coordinates in [-1, 1]^dim.
    """
    return _REFERENCE_NODES[kind].copy()


def shape_values(kind: ElementKind, xi: np.ndarray) -> np.ndarray:
    """
    Evaluate the multilinear shape functions at local points.

    Args:
        kind (ElementKind): Element kind.
        xi (np.ndarray): (P, dim) local points.

    Returns:
        np.ndarray: (P, n_nodes) values.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    nodes = _REFERENCE_NODES[kind]
    # (P, nn, dim) factors (1 + xi_k * xi_ik) / 2
    factors = 0.5 * (1.0 + xi[:, None, :] * nodes[None, :, :])
    return np.prod(factors, axis=2)


def shape_gradients(kind: ElementKind, xi: np.ndarray) -> np.ndarray:
    """
    Evaluate reference gradients of the shape functions.

    Args:
        kind (ElementKind): Element kind.
        xi (np.ndarray): (P, dim) local points.

    Returns:
        np.ndarray: (P, n_nodes, dim) derivatives dN_i/dxi_j.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    nodes = _REFERENCE_NODES[kind]
    dim = kind.dim
    factors = 0.5 * (1.0 + xi[:, None, :] * nodes[None, :, :])
    grads = np.empty(factors.shape)
    for j in range(dim):
        others = np.ones(factors.shape[:2])
        for k in range(dim):
            if k != j:
                others = others * factors[:, :, k]
        grads[:, :, j] = 0.5 * nodes[None, :, j] * others
    return grads


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Tensor-product Gauss-Legendre rule on the reference element.

    Attributes:
        points (np.ndarray): (Q, dim) local points.
        weights (np.ndarray): (Q,) weights.
        order (int): Points per direction.
    """
    points: np.ndarray
    weights: np.ndarray
    order: int


def gauss_rule(kind: ElementKind, order: int = 2) -> QuadratureRule:
    """
    Build a tensor-product Gauss-Legendre rule.

    Args:
        kind (ElementKind): Element kind.
        order (int): Points per direction, one of 1, 2, 3.

    Returns:
        QuadratureRule: The rule.

    Raises:
        QuadratureError: If the order is unsupported.
    """
    if order not in (1, 2, 3):
        raise QuadratureError(f"Unsupported Gauss order {order}; expected 1, 2 or 3")
    x1, w1 = np.polynomial.legendre.leggauss(order)
    grids = np.meshgrid(*([x1] * kind.dim), indexing="ij")
    wgrids = np.meshgrid(*([w1] * kind.dim), indexing="ij")
    # first local direction varies fastest
    points = np.stack([g.transpose().ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.transpose().ravel() for g in wgrids], axis=1), axis=1)
    return QuadratureRule(points=points, weights=weights, order=order)


@dataclass(frozen=True)
class Segment:
    """
    A graded piece of an axis.

    Element sizes follow a geometric progression: each element is
    `ratio` times the previous one, moving from `start` to `stop`.

    Attributes:
        start (float): First coordinate.
        stop (float): Last coordinate.
        n (int): Number of graded elements.
        ratio (float): Growth factor between consecutive elements.
        subdivide (int): Equal splits of every graded element (refinement).
    """
    start: float
    stop: float
    n: int
    ratio: float = 1.0
    subdivide: int = 1

    @property
    def count(self) -> int:
        return self.n * self.subdivide

    def coordinates(self) -> np.ndarray:
        coarse = self._graded()
        if self.subdivide == 1:
            return coarse
        fractions = np.arange(self.subdivide) / self.subdivide
        fine = (coarse[:-1, None] + np.diff(coarse)[:, None] * fractions[None, :]).ravel()
        return np.concatenate([fine, [coarse[-1]]])

    def _graded(self) -> np.ndarray:
        if self.n < 1:
            raise MeshError(f"Segment needs at least one element, got {self.n}")
        if not self.stop > self.start:
            raise MeshError(f"Segment extent must be positive: [{self.start}, {self.stop}]")
        if not self.ratio > 0:
            raise MeshError(f"Grading ratio must be positive, got {self.ratio}")
        if abs(self.ratio - 1.0) < 1e-12:
            sizes = np.ones(self.n)
        else:
            sizes = self.ratio ** np.arange(self.n)
        sizes = sizes * (self.stop - self.start) / sizes.sum()
        coords = self.start + np.concatenate([[0.0], np.cumsum(sizes)])
        coords[-1] = self.stop
        return coords


def axis_coordinates(segments: Sequence[Segment]) -> np.ndarray:
    """
    Concatenate graded segments into one strictly increasing axis.

    Args:
        segments (Sequence[Segment]): Adjacent segments in increasing order.

    Returns:
        np.ndarray: Node coordinates along the axis.

    Raises:
        MeshError: If segments are not contiguous or produce inverted elements.
    """
    if not segments:
        raise MeshError("Axis needs at least one segment")
    pieces: List[np.ndarray] = []
    for i, seg in enumerate(segments):
        coords = seg.coordinates()
        if i > 0:
            if abs(coords[0] - pieces[-1][-1]) > 1e-12 * max(1.0, abs(coords[0])):
                raise MeshError(f"Segment {i} does not start where segment {i - 1} ends")
            coords = coords[1:]
        pieces.append(coords)
    axis = np.concatenate(pieces)
    if np.any(np.diff(axis) <= 0):
        raise MeshError("Grading produces inverted or zero-size elements")
    return axis


def graded_axis(start: float, stop: float, focus: float, n_before: int, n_after: int,
                ratio: float) -> Tuple[Segment, ...]:
    """
    Segments that are finest at `focus` and grow by `ratio` away from it.

    Args:
        start (float): Axis start.
        stop (float): Axis end.
        focus (float): Location of the finest elements.
        n_before (int): Elements in [start, focus].
        n_after (int): Elements in [focus, stop].
        ratio (float): Growth factor (> 1 coarsens away from the focus).

    Returns:
        Tuple[Segment, ...]: One or two segments.
    """
    segments = []
    if n_before > 0:
        segments.append(Segment(start, focus, n_before, 1.0 / ratio))
    if n_after > 0:
        segments.append(Segment(focus, stop, n_after, ratio))
    return tuple(segments)


@dataclass(frozen=True)
class GradingSpec:
    """
    Per-axis grading of a tensor mesh.

    Attributes:
        axes (Tuple[Tuple[Segment, ...], ...]): Segments per axis.
    """
    axes: Tuple[Tuple[Segment, ...], ...]

    @classmethod
    def uniform(cls, counts: Sequence[int], extents: Sequence[Tuple[float, float]]) -> "GradingSpec":
        return cls(tuple((Segment(lo, hi, n),) for n, (lo, hi) in zip(counts, extents)))

    def coordinates(self) -> List[np.ndarray]:
        return [axis_coordinates(segs) for segs in self.axes]

    def counts(self) -> Tuple[int, ...]:
        return tuple(sum(s.count for s in segs) for segs in self.axes)

    def refined(self, factor: int, axes: Optional[Sequence[int]] = None) -> "GradingSpec":
        """
        Split every element into `factor` equal parts.

        Args:
            factor (int): Splits per element.
            axes (Optional[Sequence[int]]): Axes to refine, all by default.

        Returns:
            GradingSpec: The refined grading.
        """
        if factor < 1:
            raise MeshError(f"Refinement factor must be positive, got {factor}")
        targets = range(len(self.axes)) if axes is None else axes
        return GradingSpec(tuple(
            tuple(replace(s, subdivide=s.subdivide * factor) for s in segs) if d in targets else segs
            for d, segs in enumerate(self.axes)
        ))


@dataclass(frozen=True, eq=False)
class ShapeSet:
    """
    Shape function data for one element at one local point.

    Attributes:
        kind (ElementKind): Element kind.
        values (np.ndarray): (n_nodes,) N_i.
        ref_gradients (np.ndarray): (n_nodes, dim) dN_i/dxi_j.
        jacobian (np.ndarray): (dim, dim) J[a, b] = dx_b/dxi_a.
        det (float): Jacobian determinant.
        inverse (np.ndarray): Inverse Jacobian.
        gradients (np.ndarray): (n_nodes, dim) physical gradients dN_i/dx_j.
    """
    kind: ElementKind
    values: np.ndarray
    ref_gradients: np.ndarray
    jacobian: np.ndarray
    det: float
    inverse: np.ndarray
    gradients: np.ndarray


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Immutable structured finite element mesh.

    Attributes:
        dim (int): Spatial dimension.
        kind (ElementKind): Element kind of every element.
        coords (np.ndarray): (n_nodes, dim) node coordinates in meters.
        elements (np.ndarray): (n_elements, nodes_per_element) connectivity.
        region (np.ndarray): (n_elements,) integer region tag.
        region_names (Dict[str, int]): Region name to tag.
        boundary (Dict[str, np.ndarray]): Named boundary node sets.
        flow_axis (int): Coordinate index along which the conductor moves.
        axis_names (Tuple[str, ...]): Coordinate labels.
        axes (Optional[Tuple[np.ndarray, ...]]): Axis coordinates for tensor meshes.
        nominal_centers (Optional[np.ndarray]): Per-element (z, r) centers of the
            underlying structured cross-section, for mapped meshes.
    """
    dim: int
    kind: ElementKind
    coords: np.ndarray
    elements: np.ndarray
    region: np.ndarray
    region_names: Dict[str, int]
    boundary: Dict[str, np.ndarray]
    flow_axis: int = 0
    axis_names: Tuple[str, ...] = ("z",)
    axes: Optional[Tuple[np.ndarray, ...]] = None
    nominal_centers: Optional[np.ndarray] = None
    _spacing: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        for arr in (self.coords, self.elements, self.region):
            arr.flags.writeable = False
        n_nodes = self.coords.shape[0]
        if self.elements.size and (self.elements.min() < 0 or self.elements.max() >= n_nodes):
            raise MeshError("Connectivity index out of range")
        repeated = np.nonzero((np.diff(np.sort(self.elements, axis=1), axis=1) == 0).any(axis=1))[0]
        if repeated.size:
            raise MeshError("Element has repeated nodes", element=int(repeated[0]))
        xs = self.coords[self.elements][:, :, self.flow_axis]
        spacing = xs.max(axis=1) - xs.min(axis=1)
        spacing.flags.writeable = False
        object.__setattr__(self, "_spacing", spacing)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def spacing(self) -> np.ndarray:
        """Element length along the flow axis (meters)."""
        return self._spacing

    def region_mask(self, name: str) -> np.ndarray:
        """
        Boolean mask of elements in a named region.

        Args:
            name (str): Region name.

        Returns:
            np.ndarray: (n_elements,) mask.
        """
        if name not in self.region_names:
            raise MeshError(f"Unknown region '{name}'")
        return self.region == self.region_names[name]

    def region_nodes(self, tags: Sequence[int]) -> np.ndarray:
        """Sorted nodes touched by elements whose tag is in `tags`."""
        mask = np.isin(self.region, list(tags))
        return np.unique(self.elements[mask])

    def centers(self) -> np.ndarray:
        """(n_elements, dim) element centroids of the nodes."""
        return self.coords[self.elements].mean(axis=1)

    def jacobians(self, xi: np.ndarray) -> np.ndarray:
        """
        Jacobian matrices of every element at local points.

        Args:
            xi (np.ndarray): (P, dim) local points.

        Returns:
            np.ndarray: (n_elements, P, dim, dim) with J[a, b] = dx_b/dxi_a.
        """
        grads = shape_gradients(self.kind, xi)
        x = self.coords[self.elements]
        return np.einsum("pia,eib->epab", grads, x)

    def check_jacobians(self, order: int = 2) -> np.ndarray:
        """
        Verify positive Jacobian determinants at all Gauss points.

        Args:
            order (int): Gauss order used for the check.

        Returns:
            np.ndarray: (n_elements, Q) determinants.

        Raises:
            MeshError: On the first element with a non-positive determinant.
        """
        rule = gauss_rule(self.kind, order)
        dets = np.linalg.det(self.jacobians(rule.points))
        bad = np.nonzero(dets.min(axis=1) <= 0.0)[0]
        if bad.size:
            raise MeshError("Non-positive Jacobian determinant", element=int(bad[0]))
        return dets

    def measures(self, order: int = 2) -> np.ndarray:
        """(n_elements,) element length/area/volume by quadrature."""
        rule = gauss_rule(self.kind, order)
        dets = np.linalg.det(self.jacobians(rule.points))
        return dets @ rule.weights

    def write_vtk(self, path, point_data=None, cell_data=None, header: str = "wrfem mesh") -> None:
        """
        Write the mesh as a legacy-VTK ASCII unstructured grid.

        Args:
            path: Output file path.
            point_data (Optional[Dict[str, np.ndarray]]): Nodal fields.
            cell_data (Optional[Dict[str, np.ndarray]]): Element fields.
            header (str): Title line.
        """
        from wrfem.utils.utils import write_vtk
        write_vtk(path, self, point_data or {}, cell_data or {}, header)


def shape_eval(mesh: Mesh, elem: int, xi: Sequence[float]) -> ShapeSet:
    """
    Evaluate shape functions and physical gradients on one element.

    Args:
        mesh (Mesh): The mesh.
        elem (int): Element id.
        xi (Sequence[float]): Local point in the reference element.

    Returns:
        ShapeSet: Values, gradients and Jacobian data.

    Raises:
        MeshError: If the point is outside the reference element or the
            Jacobian is singular.
    """
    point = np.asarray(xi, dtype=float).reshape(1, mesh.dim)
    if np.any(np.abs(point) > 1.0 + 1e-12):
        raise MeshError(f"Local point {point.ravel().tolist()} outside reference element", element=elem)
    values = shape_values(mesh.kind, point)[0]
    ref = shape_gradients(mesh.kind, point)[0]
    jac = ref.T @ mesh.coords[mesh.elements[elem]]
    det = float(np.linalg.det(jac))
    if abs(det) <= 1e-300:
        raise MeshError("Singular Jacobian", element=elem)
    inv = np.linalg.inv(jac)
    return ShapeSet(kind=mesh.kind, values=values, ref_gradients=ref, jacobian=jac,
                    det=det, inverse=inv, gradients=ref @ inv.T)


def locate_points(mesh: Mesh, points: np.ndarray, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """
    Find the element and local coordinates of points in a tensor mesh.

    Points on an interior element face are assigned to the element above it.

    Args:
        mesh (Mesh): Tensor-product mesh (mesh.axes set).
        points (np.ndarray): (P, dim) physical points.
        tol (float): Relative tolerance on the domain bounds.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (P,) element ids and (P, dim) local points.

    Raises:
        SamplingError: If the mesh is not a tensor mesh or a point lies outside it.
    """
    if mesh.axes is None:
        raise SamplingError("Point location needs a tensor-product mesh")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != mesh.dim:
        raise SamplingError(f"Points have dimension {points.shape[1]}, mesh has {mesh.dim}")
    elem = np.zeros(points.shape[0], dtype=int)
    xi = np.empty_like(points)
    stride = 1
    for d, axis in enumerate(mesh.axes):
        lo, hi = axis[0], axis[-1]
        slack = tol * max(1.0, hi - lo)
        p = points[:, d]
        outside = (p < lo - slack) | (p > hi + slack)
        if np.any(outside):
            bad = int(np.nonzero(outside)[0][0])
            raise SamplingError(f"Point {points[bad].tolist()} lies outside the mesh")
        idx = np.clip(np.searchsorted(axis, p, side="right") - 1, 0, len(axis) - 2)
        xi[:, d] = np.clip(2.0 * (p - axis[idx]) / (axis[idx + 1] - axis[idx]) - 1.0, -1.0, 1.0)
        elem += stride * idx
        stride *= len(axis) - 1
    return elem, xi


def evaluate_points(mesh: Mesh, elements: np.ndarray, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Shape values and physical gradients at one local point per element.

    Args:
        mesh (Mesh): The mesh.
        elements (np.ndarray): (P,) element ids.
        xi (np.ndarray): (P, dim) local points.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (P, n) values and (P, n, dim) gradients.
    """
    elements = np.asarray(elements, dtype=int)
    values = shape_values(mesh.kind, xi)
    ref = shape_gradients(mesh.kind, xi)
    x = mesh.coords[mesh.elements[elements]]
    jac = np.einsum("pia,pib->pab", ref, x)
    if np.any(np.abs(np.linalg.det(jac)) <= 1e-300):
        raise MeshError("Singular Jacobian at sample point")
    inv = np.linalg.inv(jac)
    return values, np.einsum("pia,pba->pib", ref, inv)


def _tensor_mesh(axes: List[np.ndarray], kind: ElementKind, axis_names: Tuple[str, ...],
                 region_fn: Optional[RegionFn], region_names: Optional[Dict[str, int]],
                 flow_axis: int = 0) -> Mesh:
    shape = [len(a) for a in axes]
    grids = np.meshgrid(*axes, indexing="ij")
    # node index = i + nx * (j + ny * k)
    coords = np.stack([g.transpose().ravel() for g in grids], axis=1)
    ids = np.arange(coords.shape[0]).reshape(shape[::-1]).transpose()

    if kind is ElementKind.LINE2:
        elements = np.stack([ids[:-1], ids[1:]], axis=1)
    elif kind is ElementKind.QUAD4:
        corners = [ids[:-1, :-1], ids[1:, :-1], ids[1:, 1:], ids[:-1, 1:]]
        elements = np.stack([c.transpose().ravel() for c in corners], axis=1)
    else:
        corners = [ids[:-1, :-1, :-1], ids[1:, :-1, :-1], ids[1:, 1:, :-1], ids[:-1, 1:, :-1],
                   ids[:-1, :-1, 1:], ids[1:, :-1, 1:], ids[1:, 1:, 1:], ids[:-1, 1:, 1:]]
        elements = np.stack([c.transpose().ravel() for c in corners], axis=1)

    boundary: Dict[str, np.ndarray] = {}
    all_b = []
    for d, name in enumerate(axis_names):
        lo = np.take(ids, 0, axis=d).ravel()
        hi = np.take(ids, -1, axis=d).ravel()
        boundary[f"{name}min"] = np.sort(lo)
        boundary[f"{name}max"] = np.sort(hi)
        all_b.extend([lo, hi])
    boundary["boundary"] = np.unique(np.concatenate(all_b))
    if kind is ElementKind.LINE2:
        boundary["left"] = boundary[f"{axis_names[0]}min"]
        boundary["right"] = boundary[f"{axis_names[0]}max"]

    centers = coords[elements].mean(axis=1)
    if region_fn is None:
        region = np.zeros(elements.shape[0], dtype=int)
        names = {"domain": 0}
    else:
        region = np.asarray(region_fn(centers), dtype=int)
        names = dict(region_names or {})
    mesh = Mesh(dim=len(axes), kind=kind, coords=coords, elements=elements, region=region,
                region_names=names, boundary=boundary, flow_axis=flow_axis,
                axis_names=axis_names, axes=tuple(np.array(a) for a in axes))
    if kind is not ElementKind.LINE2:
        mesh.check_jacobians()
    logger.debug(f"Built {kind.value} mesh: {mesh.n_nodes} nodes, {mesh.n_elements} elements")
    return mesh


def build_line_mesh(n_elems: int, z0: float, z1: float) -> Mesh:
    """
    Build a uniform 1D mesh of line2 elements.

    Args:
        n_elems (int): Number of elements (>= 1).
        z0 (float): Left end in meters.
        z1 (float): Right end in meters (> z0).

    Returns:
        Mesh: Line mesh with boundary sets "left" and "right".

    Raises:
        MeshError: On zero elements or an empty interval.
    """
    if n_elems < 1:
        raise MeshError(f"Need at least one element, got {n_elems}")
    if not z1 > z0:
        raise MeshError(f"Domain end {z1} must exceed start {z0}")
    axis = np.linspace(z0, z1, n_elems + 1)
    return _tensor_mesh([axis], ElementKind.LINE2, ("z",), None, None)


def build_quad_mesh(nz: int, ny: int, extents: Sequence[Tuple[float, float]],
                    grading: Optional[GradingSpec] = None,
                    region_fn: Optional[RegionFn] = None,
                    region_names: Optional[Dict[str, int]] = None,
                    axis_names: Tuple[str, str] = ("z", "y")) -> Mesh:
    """
    Build a structured quad4 mesh on a rectangle.

    Args:
        nz (int): Elements along the flow axis.
        ny (int): Elements across.
        extents (Sequence[Tuple[float, float]]): ((z0, z1), (y0, y1)) in meters.
        grading (Optional[GradingSpec]): Graded axes; counts must equal (nz, ny).
        region_fn (Optional[RegionFn]): Maps (E, 2) centers to region tags.
        region_names (Optional[Dict[str, int]]): Region name to tag.
        axis_names (Tuple[str, str]): Coordinate labels used for boundary set names.

    Returns:
        Mesh: The quad mesh.

    Raises:
        MeshError: On bad counts, extents or grading.
    """
    if nz < 1 or ny < 1:
        raise MeshError(f"Element counts must be positive, got ({nz}, {ny})")
    for lo, hi in extents:
        if not hi > lo:
            raise MeshError(f"Non-positive extent [{lo}, {hi}]")
    if grading is None:
        grading = GradingSpec.uniform((nz, ny), extents)
    elif grading.counts() != (nz, ny):
        raise MeshError(f"Grading counts {grading.counts()} do not match ({nz}, {ny})")
    return _tensor_mesh(grading.coordinates(), ElementKind.QUAD4, axis_names, region_fn, region_names)


def build_hex_mesh(nx: int, ny: int, nz: int, extents: Sequence[Tuple[float, float]],
                   grading: Optional[GradingSpec] = None,
                   region_fn: Optional[RegionFn] = None,
                   region_names: Optional[Dict[str, int]] = None) -> Mesh:
    """
    Build a structured hex8 mesh on a box; the flow axis is z.

    Args:
        nx (int): Elements along x.
        ny (int): Elements along y.
        nz (int): Elements along z.
        extents (Sequence[Tuple[float, float]]): Box extents per axis.
        grading (Optional[GradingSpec]): Graded axes.
        region_fn (Optional[RegionFn]): Maps (E, 3) centers to region tags.
        region_names (Optional[Dict[str, int]]): Region name to tag.

    Returns:
        Mesh: The hex mesh.
    """
    if min(nx, ny, nz) < 1:
        raise MeshError(f"Element counts must be positive, got ({nx}, {ny}, {nz})")
    for lo, hi in extents:
        if not hi > lo:
            raise MeshError(f"Non-positive extent [{lo}, {hi}]")
    if grading is None:
        grading = GradingSpec.uniform((nx, ny, nz), extents)
    elif grading.counts() != (nx, ny, nz):
        raise MeshError(f"Grading counts {grading.counts()} do not match ({nx}, {ny}, {nz})")
    return _tensor_mesh(grading.coordinates(), ElementKind.HEX8, ("x", "y", "z"),
                        region_fn, region_names, flow_axis=2)


def build_cylinder_mesh(z_axis: np.ndarray, r_axis: np.ndarray, n_theta: int,
                        region_fn: Optional[RegionFn] = None,
                        region_names: Optional[Dict[str, int]] = None) -> Mesh:
    """
    Map a structured z x r x theta block onto a Cartesian hex mesh.

    The innermost radial layer is replaced by a square Cartesian core whose
    corners sit on radius r_axis[1]; every other radial node lies on a circle,
    so the (z, r) cross-section reproduces the 2D axisymmetric mesh.

    Args:
        z_axis (np.ndarray): Axial node coordinates.
        r_axis (np.ndarray): Radial node coordinates starting at 0.
        n_theta (int): Angular elements, a positive multiple of 4.
        region_fn (Optional[RegionFn]): Maps nominal (E, 2) (z, r) centers to tags.
        region_names (Optional[Dict[str, int]]): Region name to tag.

    Returns:
        Mesh: Hex mesh with boundary sets "zmin", "zmax", "outer", "boundary".

    Raises:
        MeshError: On bad axes or angular count.
    """
    z_axis = np.asarray(z_axis, dtype=float)
    r_axis = np.asarray(r_axis, dtype=float)
    if n_theta < 4 or n_theta % 4:
        raise MeshError(f"Angular element count must be a positive multiple of 4, got {n_theta}")
    if len(r_axis) < 3 or abs(r_axis[0]) > 0 or np.any(np.diff(r_axis) <= 0):
        raise MeshError("Radial axis must start at 0, increase strictly and have >= 2 elements")
    if len(z_axis) < 2 or np.any(np.diff(z_axis) <= 0):
        raise MeshError("Axial coordinates must increase strictly")

    nc = n_theta // 4
    a = r_axis[1] / math.sqrt(2.0)
    n_contours = len(r_axis) - 1  # contours 1..M

    # cross-section nodes: core grid, then circles for contours 2..M
    cx = np.linspace(-a, a, nc + 1)
    core_xy = np.array([[x, y] for y in cx for x in cx])
    n_core = core_xy.shape[0]

    def core_id(i: int, j: int) -> int:
        return j * (nc + 1) + i

    perimeter = []
    for k in range(n_theta):
        side, t = divmod(k, nc)
        if side == 0:
            perimeter.append(core_id(nc, t))
        elif side == 1:
            perimeter.append(core_id(nc - t, nc))
        elif side == 2:
            perimeter.append(core_id(0, nc - t))
        else:
            perimeter.append(core_id(t, 0))
    perimeter = np.array(perimeter)

    theta = -0.25 * math.pi + 2.0 * math.pi * np.arange(n_theta) / n_theta
    ring_xy = np.concatenate([
        np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1) for r in r_axis[2:]
    ])
    section = np.concatenate([core_xy, ring_xy])
    per_layer = section.shape[0]

    def contour_id(j: int, k: int) -> int:
        k = k % n_theta
        if j == 1:
            return int(perimeter[k])
        return n_core + (j - 2) * n_theta + k

    quads = []
    nominal_r = []
    for j in range(nc):
        for i in range(nc):
            quads.append([core_id(i, j), core_id(i + 1, j), core_id(i + 1, j + 1), core_id(i, j + 1)])
            nominal_r.append(0.5 * r_axis[1])
    for j in range(1, n_contours):
        for k in range(n_theta):
            quads.append([contour_id(j, k), contour_id(j + 1, k),
                          contour_id(j + 1, k + 1), contour_id(j, k + 1)])
            nominal_r.append(0.5 * (r_axis[j] + r_axis[j + 1]))
    quads = np.array(quads)
    nominal_r = np.array(nominal_r)

    nz = len(z_axis) - 1
    coords = np.concatenate([
        np.column_stack([section, np.full(per_layer, z)]) for z in z_axis
    ])
    elements = np.concatenate([
        np.concatenate([quads + l * per_layer, quads + (l + 1) * per_layer], axis=1)
        for l in range(nz)
    ])
    zc = 0.5 * (z_axis[:-1] + z_axis[1:])
    nominal = np.column_stack([np.repeat(zc, len(quads)), np.tile(nominal_r, nz)])

    outer = np.array([contour_id(n_contours, k) for k in range(n_theta)])
    boundary = {
        "zmin": np.arange(per_layer),
        "zmax": np.arange(per_layer) + nz * per_layer,
        "outer": np.sort(np.concatenate([outer + l * per_layer for l in range(nz + 1)])),
    }
    boundary["boundary"] = np.unique(np.concatenate(list(boundary.values())))

    if region_fn is None:
        region = np.zeros(elements.shape[0], dtype=int)
        names = {"domain": 0}
    else:
        region = np.asarray(region_fn(nominal), dtype=int)
        names = dict(region_names or {})
    mesh = Mesh(dim=3, kind=ElementKind.HEX8, coords=coords, elements=elements, region=region,
                region_names=names, boundary=boundary, flow_axis=2, axis_names=("x", "y", "z"),
                axes=None, nominal_centers=nominal)
    mesh.check_jacobians()
    logger.info(f"Built cylindrical hex mesh: {mesh.n_nodes} nodes, {mesh.n_elements} elements "
                f"({nz} x {n_contours} x {n_theta})")
    return mesh


def cylinder_layout(mesh: Mesh, n_theta: int, n_radial: int) -> Dict[str, int]:
    """
    Element counts of a mesh built by build_cylinder_mesh.

    Args:
        mesh (Mesh): Cylindrical mesh.
        n_theta (int): Angular elements.
        n_radial (int): Radial elements of the cross-section axis.

    Returns:
        Dict[str, int]: "core" and "ring" element counts per axial layer.
    """
    core = (n_theta // 4) ** 2
    ring = (n_radial - 1) * n_theta
    return {"core": core, "ring": ring, "per_layer": core + ring,
            "layers": mesh.n_elements // (core + ring)}

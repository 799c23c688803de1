"""
Sparse global systems: deterministic assembly, Dirichlet elimination and
direct LU solution.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from wrfem.core.errors import AssemblyError, SolverError

logger = logging.getLogger(__name__)

RESIDUAL_BOUND = 1e-10


@dataclass(frozen=True)
class DofLayout:
    """
    Block dof numbering: dof = field_index * n_nodes + node.

    Attributes:
        fields (tuple): Ordered field names.
        n_nodes (int): Number of mesh nodes.
    """
    fields: tuple
    n_nodes: int

    @property
    def n_dofs(self) -> int:
        return len(self.fields) * self.n_nodes

    def field_index(self, name: str) -> int:
        try:
            return self.fields.index(name)
        except ValueError:
            raise AssemblyError(f"Unknown field '{name}'; layout has {list(self.fields)}")

    def dofs(self, nodes, name: str) -> np.ndarray:
        """
        Global dofs of a field at the given nodes.

        Args:
            nodes: Node id or array of node ids.
            name (str): Field name.

        Returns:
            np.ndarray: Global dof ids (same shape as nodes).
        """
        nodes = np.asarray(nodes)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= self.n_nodes):
            raise AssemblyError("Node id out of range")
        return self.field_index(name) * self.n_nodes + nodes

    def split(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        """Split a global vector into per-field nodal arrays."""
        if x.shape[0] != self.n_dofs:
            raise AssemblyError(f"Vector of length {x.shape[0]} does not match {self.n_dofs} dofs")
        return {name: x[i * self.n_nodes:(i + 1) * self.n_nodes].copy()
                for i, name in enumerate(self.fields)}


class SparseSystem:
    """
    A square sparse linear system assembled from element contributions.

    Triplets are accumulated unordered and reduced at `finalize` in a fixed
    (row, col, value) order, so the result does not depend on the order in
    which elements were visited.
    """

    def __init__(self, n_dofs: int):
        if n_dofs < 1:
            raise AssemblyError(f"System needs at least one dof, got {n_dofs}")
        self.n_dofs = n_dofs
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []
        self._rhs_rows: List[np.ndarray] = []
        self._rhs_vals: List[np.ndarray] = []
        self._constraints: Dict[int, float] = {}
        self.matrix: Optional[sp.csr_matrix] = None
        self.rhs: Optional[np.ndarray] = None
        self.residual: Optional[float] = None

    @property
    def finalized(self) -> bool:
        return self.matrix is not None

    def _check_open(self) -> None:
        if self.finalized:
            raise AssemblyError("System is already finalized")

    def _check_range(self, dofs: np.ndarray) -> None:
        if dofs.size and (dofs.min() < 0 or dofs.max() >= self.n_dofs):
            raise AssemblyError(f"Dof out of range [0, {self.n_dofs})")

    def scatter_add(self, local_matrix: np.ndarray, local_rhs: Optional[np.ndarray],
                    dof_map: Sequence[int], col_map: Optional[Sequence[int]] = None) -> None:
        """
        Add one local matrix and vector.

        Args:
            local_matrix (np.ndarray): (n, m) block.
            local_rhs (Optional[np.ndarray]): (n,) vector or None.
            dof_map (Sequence[int]): Row dofs.
            col_map (Optional[Sequence[int]]): Column dofs, defaults to dof_map.
        """
        rows = np.asarray(dof_map)
        cols = rows if col_map is None else np.asarray(col_map)
        self.add_blocks(rows[None], cols[None], np.asarray(local_matrix, dtype=float)[None])
        if local_rhs is not None:
            self.add_vectors(rows[None], np.asarray(local_rhs, dtype=float)[None])

    def add_blocks(self, row_dofs: np.ndarray, col_dofs: np.ndarray, blocks: np.ndarray) -> None:
        """
        Add a batch of element matrices.

        Args:
            row_dofs (np.ndarray): (E, n) row dofs.
            col_dofs (np.ndarray): (E, m) column dofs.
            blocks (np.ndarray): (E, n, m) element matrices.
        """
        self._check_open()
        row_dofs = np.asarray(row_dofs)
        col_dofs = np.asarray(col_dofs)
        self._check_range(row_dofs)
        self._check_range(col_dofs)
        e, n, m = blocks.shape
        self._rows.append(np.broadcast_to(row_dofs[:, :, None], (e, n, m)).ravel())
        self._cols.append(np.broadcast_to(col_dofs[:, None, :], (e, n, m)).ravel())
        self._vals.append(np.asarray(blocks, dtype=float).ravel())

    def add_vectors(self, dofs: np.ndarray, vectors: np.ndarray) -> None:
        """
        Add a batch of element load vectors.

        Args:
            dofs (np.ndarray): (E, n) dofs.
            vectors (np.ndarray): (E, n) values.
        """
        self._check_open()
        dofs = np.asarray(dofs)
        self._check_range(dofs)
        self._rhs_rows.append(dofs.ravel())
        self._rhs_vals.append(np.asarray(vectors, dtype=float).ravel())

    def finalize(self) -> sp.csr_matrix:
        """
        Reduce triplets into CSR form with sorted rows and no duplicates.

        Returns:
            sp.csr_matrix: The assembled matrix.
        """
        self._check_open()
        n = self.n_dofs
        if self._vals:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        order = np.lexsort((vals, cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if vals.size:
            start = np.concatenate([[True], (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])])
            idx = np.nonzero(start)[0]
            vals = np.add.reduceat(vals, idx)
            rows, cols = rows[idx], cols[idx]
        indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
        self.matrix = sp.csr_matrix((vals, cols, indptr), shape=(n, n))

        rhs = np.zeros(n)
        if self._rhs_vals:
            r = np.concatenate(self._rhs_rows)
            v = np.concatenate(self._rhs_vals)
            order = np.lexsort((v, r))
            r, v = r[order], v[order]
            start = np.concatenate([[True], r[1:] != r[:-1]])
            idx = np.nonzero(start)[0]
            rhs[r[idx]] = np.add.reduceat(v, idx)
        self.rhs = rhs
        self._rows, self._cols, self._vals = [], [], []
        self._rhs_rows, self._rhs_vals = [], []
        logger.debug(f"Finalized system: {n} dofs, {self.matrix.nnz} nonzeros")
        return self.matrix

    def replace_rows(self, rows: Sequence[int], new_rows: sp.spmatrix, new_rhs: Sequence[float]) -> None:
        """
        Overwrite whole equations of a finalized system.

        Args:
            rows (Sequence[int]): Equations to replace.
            new_rows (sp.spmatrix): (k, n_dofs) replacement coefficients.
            new_rhs (Sequence[float]): (k,) replacement right-hand sides.
        """
        if not self.finalized:
            raise AssemblyError("replace_rows requires a finalized system")
        rows = np.asarray(rows, dtype=int)
        self._check_range(rows)
        new_rows = sp.csr_matrix(new_rows)
        if new_rows.shape != (rows.size, self.n_dofs):
            raise AssemblyError(f"Replacement block shape {new_rows.shape} does not match "
                                f"({rows.size}, {self.n_dofs})")
        keep = np.ones(self.n_dofs)
        keep[rows] = 0.0
        placement = sp.csr_matrix((np.ones(rows.size), (rows, np.arange(rows.size))),
                                  shape=(self.n_dofs, rows.size))
        matrix = sp.diags(keep) @ self.matrix + placement @ new_rows
        matrix.eliminate_zeros()
        matrix.sort_indices()
        self.matrix = sp.csr_matrix(matrix)
        self.rhs[rows] = np.asarray(new_rhs, dtype=float)

    def constrain(self, dofs: Sequence[int], values: Union[float, Sequence[float]]) -> None:
        """
        Prescribe values on dofs.

        Args:
            dofs (Sequence[int]): Constrained dofs.
            values (Union[float, Sequence[float]]): Scalar or per-dof values.

        Raises:
            AssemblyError: If a dof is already constrained to a different value.
        """
        dofs = np.atleast_1d(np.asarray(dofs, dtype=int))
        self._check_range(dofs)
        values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
        for d, v in zip(dofs.tolist(), values.tolist()):
            old = self._constraints.get(d)
            if old is not None and old != v:
                raise AssemblyError(f"Dof {d} already constrained to {old}, cannot set {v}")
            self._constraints[d] = v

    @property
    def constrained_dofs(self) -> np.ndarray:
        return np.array(sorted(self._constraints), dtype=int)

    def eliminated(self):
        """
        The system with Dirichlet rows and columns eliminated.

        Constrained rows become identity rows with the prescribed value on the
        right; their columns' contributions move to the right-hand side.

        Returns:
            Tuple[sp.csr_matrix, np.ndarray]: Matrix and right-hand side.
        """
        if not self.finalized:
            self.finalize()
        if not self._constraints:
            return self.matrix, self.rhs.copy()
        dofs = self.constrained_dofs
        g = np.zeros(self.n_dofs)
        g[dofs] = [self._constraints[d] for d in dofs.tolist()]
        free = np.ones(self.n_dofs)
        free[dofs] = 0.0
        d_free = sp.diags(free)
        matrix = d_free @ self.matrix @ d_free + sp.diags(1.0 - free)
        matrix = sp.csr_matrix(matrix)
        matrix.eliminate_zeros()
        matrix.sort_indices()
        rhs = free * (self.rhs - self.matrix @ g) + g
        return matrix, rhs

    def solve(self) -> np.ndarray:
        """
        Solve by sparse LU and record the relative residual.

        Returns:
            np.ndarray: Solution vector.

        Raises:
            SolverError: If the system is structurally or numerically singular.
        """
        matrix, rhs = self.eliminated()
        row_nnz = np.diff(matrix.indptr)
        empty = np.nonzero(row_nnz == 0)[0]
        if empty.size:
            raise SolverError("Structurally singular system: empty equation", pivot=int(empty[0]))
        col_nnz = np.bincount(matrix.indices, minlength=self.n_dofs)
        empty = np.nonzero(col_nnz == 0)[0]
        if empty.size:
            raise SolverError("Structurally singular system: unused unknown", pivot=int(empty[0]))
        try:
            lu = spla.splu(sp.csc_matrix(matrix))
        except RuntimeError as e:
            raise SolverError(f"LU factorization failed: {e}")
        diag = np.abs(lu.U.diagonal())
        scale = diag.max() if diag.size else 1.0
        tiny = np.nonzero(diag <= 1e-14 * scale)[0]
        if tiny.size:
            raise SolverError("Numerically singular system", pivot=int(lu.perm_c[tiny[0]]))
        x = lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("Solution contains non-finite values")
        bnorm = np.abs(rhs).max()
        res = np.abs(matrix @ x - rhs).max()
        self.residual = float(res / bnorm) if bnorm > 0 else float(res)
        if self.residual > RESIDUAL_BOUND:
            logger.warning(f"Relative residual {self.residual:.3e} exceeds {RESIDUAL_BOUND:.0e}")
        logger.debug(f"Solved {self.n_dofs} dofs, relative residual {self.residual:.3e}")
        return x

    def write_matrix_market(self, path) -> None:
        """Dump the eliminated matrix in Matrix Market coordinate format."""
        from wrfem.utils.utils import write_matrix_market
        matrix, _ = self.eliminated()
        write_matrix_market(path, matrix)


def scatter_add(system: SparseSystem, local_matrix: np.ndarray, local_rhs: Optional[np.ndarray],
                dof_map: Sequence[int]) -> SparseSystem:
    """Add a local matrix and vector to the system."""
    system.scatter_add(local_matrix, local_rhs, dof_map)
    return system


def apply_dirichlet(system: SparseSystem, layout: DofLayout, node_set: Sequence[int], field: str,
                    value: Union[float, Sequence[float]]) -> SparseSystem:
    """
    Constrain a field on a node set.

    Args:
        system (SparseSystem): The system.
        layout (DofLayout): Dof numbering.
        node_set (Sequence[int]): Nodes to constrain.
        field (str): Field name.
        value (Union[float, Sequence[float]]): Scalar or per-node values.

    Returns:
        SparseSystem: The same system.
    """
    system.constrain(layout.dofs(np.asarray(node_set, dtype=int), field), value)
    return system


def solve(system: SparseSystem) -> np.ndarray:
    """Finalize if needed and solve the system."""
    return system.solve()


class BlockAssembler:
    """
    Adds per-element field blocks of a multi-field system.

    Args:
        system (SparseSystem): Target system (not finalized).
        layout (DofLayout): Dof numbering.
        connectivity (np.ndarray): (E, n) node ids of the elements the
            local blocks belong to.
    """

    def __init__(self, system: SparseSystem, layout: DofLayout, connectivity: np.ndarray):
        self.system = system
        self.layout = layout
        self.connectivity = np.asarray(connectivity, dtype=int)

    def _dofs(self, name: str) -> np.ndarray:
        return self.layout.field_index(name) * self.layout.n_nodes + self.connectivity

    def matrix(self, row_field: str, col_field: str, blocks: np.ndarray, scale: float = 1.0) -> None:
        """Add (E, n, n) blocks coupling row_field equations to col_field unknowns."""
        if scale != 1.0:
            blocks = scale * blocks
        self.system.add_blocks(self._dofs(row_field), self._dofs(col_field), blocks)

    def vector(self, row_field: str, vectors: np.ndarray, scale: float = 1.0) -> None:
        """Add (E, n) load vectors to row_field equations."""
        if scale != 1.0:
            vectors = scale * vectors
        self.system.add_vectors(self._dofs(row_field), vectors)

"""
Small-strain linear elasticity on a :class:`WallMesh` with 4-node tetrahedra.

Everything inside this module is SI: node positions are converted from mm to m on entry
and nodal displacements back to mm on exit. Stresses are in Pa.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sla

from rsii.core.errors import ConfigError, SolverError
from rsii.core.solver.materials import REGIONS, Material
from rsii.core.solver.mesh import WallMesh

logger = logging.getLogger(__name__)

MM = 1e-3
RESIDUAL_TOL = 1e-9
_CHUNK = 16384


@dataclass(frozen=True, eq=False)
class StressField:
    """
    :param element: (n_tets, 3, 3) Cauchy stress per tet (Pa).
    :param column: (n_columns, 3, 3) through-thickness averaged stress, once computed.
    """

    element: np.ndarray
    column: np.ndarray | None = None

    def symmetry_error(self) -> float:
        """Largest ``|s - s^T| / max|s|`` over the element tensors."""
        scale = float(np.abs(self.element).max(initial=0.0))
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.element - self.element.transpose(0, 2, 1)).max() / scale)


@dataclass(frozen=True, eq=False)
class ElasticSolution:
    """
    :param displacements: (n_nodes, 3) nodal displacements in mm.
    :param stresses: Element stresses.
    :param applied_forces: (n_nodes, 3) consistent pressure loads in N.
    :param reactions: (n_nodes, 3) reaction forces in N (zero away from fixed nodes).
    :param residual: Relative residual ``|K u - f| / |f|`` on the free dofs.
    """

    displacements: np.ndarray
    stresses: StressField
    applied_forces: np.ndarray
    reactions: np.ndarray
    residual: float

    def equilibrium_error(self) -> float:
        """``|sum(reactions) + sum(loads)|`` relative to the summed load magnitudes."""
        scale = float(np.linalg.norm(self.applied_forces, axis=1).sum())
        if scale == 0.0:
            return 0.0
        net = self.reactions.sum(axis=0) + self.applied_forces.sum(axis=0)
        return float(np.linalg.norm(net) / scale)


# ---------------------------------------------------------------------------
# Element kinematics
# ---------------------------------------------------------------------------
def shape_gradients(nodes_m: np.ndarray, tets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Gradients of the four linear shape functions per tet.

    :return: ``(grads (n_tets, 4, 3) in 1/m, volumes (n_tets,) in m^3)``.
    """
    p = nodes_m[tets]
    jac = p[:, 1:, :] - p[:, :1, :]
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        raise SolverError(f"{int(np.count_nonzero(det <= 0))} tets with non-positive volume")
    inv = np.linalg.inv(jac)
    grads = np.empty((len(tets), 4, 3))
    grads[:, 1:, :] = inv.transpose(0, 2, 1)
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    return grads, det / 6.0


def _lame_per_tet(mesh: WallMesh, materials: Mapping[str, Material]) -> tuple[np.ndarray, ...]:
    lam = np.empty(mesh.n_tets)
    mu = np.empty(mesh.n_tets)
    for code, name in enumerate(REGIONS):
        sel = mesh.region_of_tet == code
        if not sel.any():
            continue
        if name not in materials:
            raise ConfigError(f"no material given for region {name!r}")
        lam[sel], mu[sel] = materials[name].lame
    return lam, mu


def assemble_stiffness(
    mesh: WallMesh, grads: np.ndarray, volumes: np.ndarray, lam: np.ndarray, mu: np.ndarray
) -> sparse.csr_matrix:
    """Global stiffness (N/m) assembled chunk-wise from COO triplets."""
    ndof = 3 * mesh.n_nodes
    eye = np.eye(3)
    k_global = sparse.csr_matrix((ndof, ndof))
    for start in range(0, mesh.n_tets, _CHUNK):
        sl = slice(start, start + _CHUNK)
        g, v, la, m = grads[sl], volumes[sl], lam[sl], mu[sl]
        # K[a,i,b,j] = V (lam g_ai g_bj + mu g_aj g_bi + mu delta_ij g_a.g_b)
        ke = (
            la[:, None, None, None, None] * np.einsum("tai,tbj->taibj", g, g)
            + m[:, None, None, None, None] * np.einsum("taj,tbi->taibj", g, g)
            + m[:, None, None, None, None]
            * np.einsum("tak,tbk,ij->taibj", g, g, eye)
        ) * v[:, None, None, None, None]
        dofs = (3 * mesh.tets[sl][:, :, None] + np.arange(3)[None, None, :]).reshape(-1, 12)
        rows = np.repeat(dofs, 12, axis=1).reshape(-1)
        cols = np.tile(dofs, (1, 12)).reshape(-1)
        k_global = k_global + sparse.coo_matrix(
            (ke.reshape(-1), (rows, cols)), shape=(ndof, ndof)
        ).tocsr()
    return k_global


def pressure_loads(mesh: WallMesh, pressure_pa: float) -> np.ndarray:
    """Consistent nodal forces (N) of a uniform pressure on ``inner_faces``."""
    area = mesh.inner_face_area_vectors() * MM**2
    face_force = -pressure_pa * area / 3.0
    forces = np.zeros((mesh.n_nodes, 3))
    for corner in range(3):
        np.add.at(forces, mesh.inner_faces[:, corner], face_force)
    return forces


def element_stresses(
    grads: np.ndarray,
    displacements_m: np.ndarray,
    tets: np.ndarray,
    lam: np.ndarray,
    mu: np.ndarray,
) -> np.ndarray:
    grad_u = np.einsum("tai,taj->tij", displacements_m[tets], grads)
    strain = 0.5 * (grad_u + grad_u.transpose(0, 2, 1))
    trace = np.trace(strain, axis1=1, axis2=2)
    return lam[:, None, None] * trace[:, None, None] * np.eye(3) + 2.0 * mu[:, None, None] * strain


# ---------------------------------------------------------------------------
# Public operation
# ---------------------------------------------------------------------------
def solve_elasticity(
    mesh: WallMesh,
    pressure: float,
    materials: Mapping[str, Material],
) -> ElasticSolution:
    """
    Linear-elastic response of the wall to a uniform lumen pressure.

    :param pressure: Lumen pressure in Pa (>= 0).
    :param materials: Material per region name (``"wall"``, optionally ``"ilt"``).
    :raises SolverError: Without fixed nodes, on a singular factorisation, or when the
                         relative residual exceeds ``RESIDUAL_TOL``.
    """
    if pressure < 0:
        raise ConfigError(f"pressure must be >= 0, got {pressure}")
    if mesh.fixed_nodes.size == 0:
        raise SolverError("no fixed nodes: the stiffness matrix is singular")

    nodes_m = mesh.nodes * MM
    grads, volumes = shape_gradients(nodes_m, mesh.tets)
    lam, mu = _lame_per_tet(mesh, materials)
    forces = pressure_loads(mesh, pressure)

    ndof = 3 * mesh.n_nodes
    fixed = np.zeros(ndof, dtype=bool)
    fixed[(3 * mesh.fixed_nodes[:, None] + np.arange(3)).reshape(-1)] = True
    free = np.flatnonzero(~fixed)
    f = forces.reshape(-1)

    u = np.zeros(ndof)
    residual = 0.0
    k_global = assemble_stiffness(mesh, grads, volumes, lam, mu)
    f_free = f[free]
    f_norm = float(np.linalg.norm(f_free))
    if f_norm > 0.0:
        k_ff = k_global[free][:, free].tocsc()
        try:
            lu = sla.splu(k_ff, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SolverError(f"stiffness factorisation failed: {exc}") from exc
        u_free = lu.solve(f_free)
        r = f_free - k_ff @ u_free
        residual = float(np.linalg.norm(r) / f_norm)
        if residual > RESIDUAL_TOL:
            u_free = u_free + lu.solve(r)
            residual = float(np.linalg.norm(f_free - k_ff @ u_free) / f_norm)
        if not np.all(np.isfinite(u_free)) or residual > RESIDUAL_TOL:
            raise SolverError(f"linear solve residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
        u[free] = u_free

    reactions = (k_global @ u - f).reshape(-1, 3)
    reactions[~fixed.reshape(-1, 3).any(axis=1)] = 0.0
    disp_m = u.reshape(-1, 3)
    stresses = element_stresses(grads, disp_m, mesh.tets, lam, mu)

    solution = ElasticSolution(
        displacements=disp_m / MM,
        stresses=StressField(stresses),
        applied_forces=forces,
        reactions=reactions,
        residual=residual,
    )
    logger.info(
        f"elasticity: {len(free)} free dofs, residual {residual:.2e}, "
        f"max |u| {np.abs(solution.displacements).max(initial=0.0):.3e} mm, "
        f"equilibrium error {solution.equilibrium_error():.2e}"
    )
    return solution

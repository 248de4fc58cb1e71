//! Structured finite-volume mesh, ghost-cell boundary conditions,
//! interface reconstruction, and the damped Lax-Friedrichs flux with
//! the low/up degree splitting.

use crate::error::{Error, Result};
use crate::harmonics::{FluxMatrix, Geometry, HalfSphereTable, OutwardNormal, PnOperator};
use crate::physics::PhysicalConstants;

/// Ghost layers carried by every field; two layers cover the widest
/// reconstruction stencil and keep periodic seams exact.
pub const NG: usize = 2;

/// Hard cap on the moment count, so flux kernels can use stack scratch.
pub const MAX_MOMENTS: usize = 256;

/// Uniform structured mesh; slab geometry has `nz = 1` and ignores z.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub geometry: Geometry,
    pub nx: usize,
    pub nz: usize,
    pub x0: f64,
    pub z0: f64,
    pub dx: f64,
    pub dz: f64,
}

impl Mesh {
    pub fn slab(x0: f64, x1: f64, nx: usize) -> Self {
        assert!(x1 > x0 && nx > 0);
        Mesh {
            geometry: Geometry::Slab1d,
            nx,
            nz: 1,
            x0,
            z0: 0.0,
            dx: (x1 - x0) / nx as f64,
            dz: 1.0,
        }
    }

    pub fn plane(x0: f64, x1: f64, nx: usize, z0: f64, z1: f64, nz: usize) -> Self {
        assert!(x1 > x0 && z1 > z0 && nx > 0 && nz > 0);
        Mesh {
            geometry: Geometry::PlaneXz,
            nx,
            nz,
            x0,
            z0,
            dx: (x1 - x0) / nx as f64,
            dz: (z1 - z0) / nz as f64,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nz
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x0 + (i as f64 + 0.5) * self.dx,
            self.z0 + (j as f64 + 0.5) * self.dz,
        )
    }

    pub fn min_spacing(&self) -> f64 {
        match self.geometry {
            Geometry::Slab1d => self.dx,
            Geometry::PlaneXz => self.dx.min(self.dz),
        }
    }

    pub fn cell_volume(&self) -> f64 {
        match self.geometry {
            Geometry::Slab1d => self.dx,
            Geometry::PlaneXz => self.dx * self.dz,
        }
    }
}

/// Interface reconstruction scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    /// First-order cell averages, as used by the asymptotic analysis.
    CellAverage,
    /// Unlimited piecewise-linear with central slopes.
    Linear,
    /// Third-order weighted two-substencil reconstruction.
    Weno3,
}

pub const WENO_EPS: f64 = 1e-6;

impl Reconstruction {
    /// Stencil half-width in ghost cells.
    pub fn ghost_width(self) -> usize {
        match self {
            Reconstruction::CellAverage => 1,
            Reconstruction::Linear => 1,
            Reconstruction::Weno3 => 2,
        }
    }

    /// Values at the left and right edges of a cell with average `u0`
    /// and neighbor averages `um1`, `up1`.
    #[inline]
    pub fn edges(self, um1: f64, u0: f64, up1: f64) -> (f64, f64) {
        match self {
            Reconstruction::CellAverage => (u0, u0),
            Reconstruction::Linear => {
                let s = (up1 - um1) * 0.25;
                (u0 - s, u0 + s)
            }
            Reconstruction::Weno3 => {
                let right = weno3_edge(um1, u0, up1);
                let left = weno3_edge(up1, u0, um1);
                (left, right)
            }
        }
    }
}

/// Right-edge value of the middle cell.
#[inline]
fn weno3_edge(um1: f64, u0: f64, up1: f64) -> f64 {
    let v0 = 1.5 * u0 - 0.5 * um1;
    let v1 = 0.5 * (u0 + up1);
    let b0 = (u0 - um1) * (u0 - um1);
    let b1 = (up1 - u0) * (up1 - u0);
    let a0 = (1.0 / 3.0) / ((WENO_EPS + b0) * (WENO_EPS + b0));
    let a1 = (2.0 / 3.0) / ((WENO_EPS + b1) * (WENO_EPS + b1));
    (a0 * v0 + a1 * v1) / (a0 + a1)
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

/// Per-cell moment vectors on a ghosted structured grid, cell-major.
#[derive(Debug, Clone)]
pub struct MomentField {
    pub nx: usize,
    pub nz: usize,
    pub nm: usize,
    data: Vec<f64>,
}

impl MomentField {
    pub fn new(mesh: &Mesh, nm: usize) -> Self {
        assert!(nm <= MAX_MOMENTS);
        MomentField {
            nx: mesh.nx,
            nz: mesh.nz,
            nm,
            data: vec![0.0; (mesh.nx + 2 * NG) * (mesh.nz + 2 * NG) * nm],
        }
    }

    #[inline]
    fn offset(&self, i: isize, j: isize) -> usize {
        debug_assert!(i >= -(NG as isize) && i < (self.nx + NG) as isize);
        debug_assert!(j >= -(NG as isize) && j < (self.nz + NG) as isize);
        let row = (j + NG as isize) as usize;
        let col = (i + NG as isize) as usize;
        (row * (self.nx + 2 * NG) + col) * self.nm
    }

    #[inline]
    pub fn cell(&self, i: isize, j: isize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.nm]
    }

    #[inline]
    pub fn cell_mut(&mut self, i: isize, j: isize) -> &mut [f64] {
        let o = self.offset(i, j);
        &mut self.data[o..o + self.nm]
    }

    #[inline]
    pub fn value(&self, i: isize, j: isize, k: usize) -> f64 {
        self.data[self.offset(i, j) + k]
    }

    /// Interior linear cell id.
    #[inline]
    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nz
    }

    /// Copy all interior moment vectors into a flat `nx*nz*nm` buffer.
    pub fn copy_interior(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_cells() * self.nm);
        for j in 0..self.nz {
            for i in 0..self.nx {
                let c = self.cell_id(i, j);
                out[c * self.nm..(c + 1) * self.nm]
                    .copy_from_slice(self.cell(i as isize, j as isize));
            }
        }
    }

    pub fn l2_diff(&self, other: &MomentField) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.nz as isize {
            for i in 0..self.nx as isize {
                let a = self.cell(i, j);
                let b = other.cell(i, j);
                for (x, y) in a.iter().zip(b) {
                    acc += (x - y) * (x - y);
                }
            }
        }
        acc.sqrt()
    }
}

/// Ghosted scalar field (opacities, temperatures for stencils).
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub nx: usize,
    pub nz: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh) -> Self {
        ScalarField {
            nx: mesh.nx,
            nz: mesh.nz,
            data: vec![0.0; (mesh.nx + 2 * NG) * (mesh.nz + 2 * NG)],
        }
    }

    #[inline]
    fn offset(&self, i: isize, j: isize) -> usize {
        let row = (j + NG as isize) as usize;
        let col = (i + NG as isize) as usize;
        row * (self.nx + 2 * NG) + col
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] = v;
    }
}

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    Vacuum,
    /// Isotropic Planckian inflow at the given temperature (keV).
    Inflow { temperature: f64 },
}

/// Conditions per mesh side; z sides are ignored in slab geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySet {
    pub x_lo: BoundaryCondition,
    pub x_hi: BoundaryCondition,
    pub z_lo: BoundaryCondition,
    pub z_hi: BoundaryCondition,
}

impl BoundarySet {
    pub fn periodic() -> Self {
        BoundarySet {
            x_lo: BoundaryCondition::Periodic,
            x_hi: BoundaryCondition::Periodic,
            z_lo: BoundaryCondition::Periodic,
            z_hi: BoundaryCondition::Periodic,
        }
    }

    pub fn vacuum() -> Self {
        BoundarySet {
            x_lo: BoundaryCondition::Vacuum,
            x_hi: BoundaryCondition::Vacuum,
            z_lo: BoundaryCondition::Vacuum,
            z_hi: BoundaryCondition::Vacuum,
        }
    }

    /// Periodic sides must come in matched pairs.
    pub fn validate(&self, geometry: Geometry) -> Result<()> {
        let pair = |a: BoundaryCondition, b: BoundaryCondition, axis: &str| {
            if (a == BoundaryCondition::Periodic) != (b == BoundaryCondition::Periodic) {
                Err(Error::Setup(format!(
                    "periodic boundary on {axis} must be paired on both sides"
                )))
            } else {
                Ok(())
            }
        };
        pair(self.x_lo, self.x_hi, "x")?;
        if geometry == Geometry::PlaneXz {
            pair(self.z_lo, self.z_hi, "z")?;
        }
        Ok(())
    }
}

/// Half-range tables for every non-periodic side.
#[derive(Debug, Clone, Default)]
pub struct BoundaryTables {
    pub x_lo: Option<HalfSphereTable>,
    pub x_hi: Option<HalfSphereTable>,
    pub z_lo: Option<HalfSphereTable>,
    pub z_hi: Option<HalfSphereTable>,
}

impl BoundaryTables {
    pub fn build(
        basis: &crate::harmonics::MomentBasis,
        bset: &BoundarySet,
    ) -> Result<BoundaryTables> {
        let mut tables = BoundaryTables::default();
        let need = |bc: BoundaryCondition| bc != BoundaryCondition::Periodic;
        if need(bset.x_lo) {
            tables.x_lo = Some(HalfSphereTable::build(basis, OutwardNormal::XMinus)?);
        }
        if need(bset.x_hi) {
            tables.x_hi = Some(HalfSphereTable::build(basis, OutwardNormal::XPlus)?);
        }
        if basis.geometry == Geometry::PlaneXz {
            if need(bset.z_lo) {
                tables.z_lo = Some(HalfSphereTable::build(basis, OutwardNormal::ZMinus)?);
            }
            if need(bset.z_hi) {
                tables.z_hi = Some(HalfSphereTable::build(basis, OutwardNormal::ZPlus)?);
            }
        }
        Ok(tables)
    }
}

fn inflow_strength(bc: BoundaryCondition, constants: &PhysicalConstants) -> f64 {
    match bc {
        BoundaryCondition::Inflow { temperature } => {
            crate::physics::planck_energy(temperature, constants)
        }
        _ => 0.0,
    }
}

/// Populate all ghost layers of `field` from its interior values.
///
/// Periodic sides wrap; inflow and vacuum sides project the boundary
/// source plus the adjacent interior cell through the half-range
/// tables. The second ghost layer repeats the first away from periodic
/// seams.
pub fn fill_ghosts(
    field: &mut MomentField,
    bset: &BoundarySet,
    tables: &BoundaryTables,
    constants: &PhysicalConstants,
) {
    fill_ghost_rows(field, bset, tables, constants, 0..field.nm);
}

/// Same as [`fill_ghosts`] but restricted to a contiguous moment range.
/// Non-periodic sides still use the full interior vector through the
/// overlap table but write only the requested rows.
pub fn fill_ghost_rows(
    field: &mut MomentField,
    bset: &BoundarySet,
    tables: &BoundaryTables,
    constants: &PhysicalConstants,
    rows: std::ops::Range<usize>,
) {
    let nx = field.nx as isize;
    let nz = field.nz as isize;
    let nm = field.nm;
    let mut ghost = vec![0.0; nm];

    // x sides, interior rows only
    for j in 0..nz {
        match bset.x_lo {
            BoundaryCondition::Periodic => {
                for g in 1..=NG as isize {
                    let src = field.offset(nx - g, j);
                    let dst = field.offset(-g, j);
                    for k in rows.clone() {
                        field.data[dst + k] = field.data[src + k];
                    }
                }
            }
            bc => {
                let table = tables.x_lo.as_ref().expect("x_lo table");
                table.ghost_moments(inflow_strength(bc, constants), field.cell(0, j), &mut ghost);
                for g in 1..=NG as isize {
                    let dst = field.offset(-g, j);
                    for k in rows.clone() {
                        field.data[dst + k] = ghost[k];
                    }
                }
            }
        }
        match bset.x_hi {
            BoundaryCondition::Periodic => {
                for g in 0..NG as isize {
                    let src = field.offset(g, j);
                    let dst = field.offset(nx + g, j);
                    for k in rows.clone() {
                        field.data[dst + k] = field.data[src + k];
                    }
                }
            }
            bc => {
                let table = tables.x_hi.as_ref().expect("x_hi table");
                table.ghost_moments(
                    inflow_strength(bc, constants),
                    field.cell(nx - 1, j),
                    &mut ghost,
                );
                for g in 0..NG as isize {
                    let dst = field.offset(nx + g, j);
                    for k in rows.clone() {
                        field.data[dst + k] = ghost[k];
                    }
                }
            }
        }
    }

    if field.nz == 1 {
        return;
    }

    // z sides, interior columns only
    for i in 0..nx {
        match bset.z_lo {
            BoundaryCondition::Periodic => {
                for g in 1..=NG as isize {
                    let src = field.offset(i, nz - g);
                    let dst = field.offset(i, -g);
                    for k in rows.clone() {
                        field.data[dst + k] = field.data[src + k];
                    }
                }
            }
            bc => {
                let table = tables.z_lo.as_ref().expect("z_lo table");
                table.ghost_moments(inflow_strength(bc, constants), field.cell(i, 0), &mut ghost);
                for g in 1..=NG as isize {
                    let dst = field.offset(i, -g);
                    for k in rows.clone() {
                        field.data[dst + k] = ghost[k];
                    }
                }
            }
        }
        match bset.z_hi {
            BoundaryCondition::Periodic => {
                for g in 0..NG as isize {
                    let src = field.offset(i, g);
                    let dst = field.offset(i, nz + g);
                    for k in rows.clone() {
                        field.data[dst + k] = field.data[src + k];
                    }
                }
            }
            bc => {
                let table = tables.z_hi.as_ref().expect("z_hi table");
                table.ghost_moments(
                    inflow_strength(bc, constants),
                    field.cell(i, nz - 1),
                    &mut ghost,
                );
                for g in 0..NG as isize {
                    let dst = field.offset(i, nz + g);
                    for k in rows.clone() {
                        field.data[dst + k] = ghost[k];
                    }
                }
            }
        }
    }
}

/// Ghost fill for a scalar field: periodic wrap, otherwise copy of the
/// adjacent interior value (used for interface opacities).
pub fn fill_scalar_ghosts(field: &mut ScalarField, bset: &BoundarySet) {
    let nx = field.nx as isize;
    let nz = field.nz as isize;
    for j in 0..nz {
        for g in 1..=NG as isize {
            let v = if bset.x_lo == BoundaryCondition::Periodic {
                field.get(nx - g, j)
            } else {
                field.get(0, j)
            };
            field.set(-g, j, v);
            let v = if bset.x_hi == BoundaryCondition::Periodic {
                field.get(g - 1, j)
            } else {
                field.get(nx - 1, j)
            };
            field.set(nx + g - 1, j, v);
        }
    }
    if field.nz == 1 {
        return;
    }
    for i in 0..nx {
        for g in 1..=NG as isize {
            let v = if bset.z_lo == BoundaryCondition::Periodic {
                field.get(i, nz - g)
            } else {
                field.get(i, 0)
            };
            field.set(i, -g, v);
            let v = if bset.z_hi == BoundaryCondition::Periodic {
                field.get(i, g - 1)
            } else {
                field.get(i, nz - 1)
            };
            field.set(i, nz + g - 1, v);
        }
    }
}

// ---------------------------------------------------------------------------
// Damped Lax-Friedrichs flux and divergence
// ---------------------------------------------------------------------------

/// Which half of the degree-split operator a flux evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Couplings to degree `l - 1`; treated implicitly by the integrators.
    Low,
    /// Couplings to degree `l + 1`; treated explicitly.
    Up,
}

/// Damping coefficient of the interface dissipation.
pub fn alpha_damping(sigma: f64, epsilon: f64) -> f64 {
    (-sigma / (epsilon * epsilon)).exp()
}

/// Numerical flux of the split system at one interface:
/// `(eps/2) A (u_minus + u_plus) + coe * (alpha eps / 2)(u_plus - u_minus)`
/// where `coe` keeps the dissipation on the up side everywhere and on
/// the low side only for the truncation degree.
pub fn lf_interface_flux(
    u_minus: &[f64],
    u_plus: &[f64],
    matrix: &FluxMatrix,
    alpha: f64,
    dissipation_rows: &[bool],
    epsilon: f64,
    out: &mut [f64],
) {
    for r in 0..matrix.n {
        let mut acc = 0.0;
        for &(c, v) in &matrix.rows[r] {
            acc += v * (u_minus[c] + u_plus[c]);
        }
        let mut f = 0.5 * epsilon * acc;
        if dissipation_rows[r] {
            f += 0.5 * alpha * epsilon * (u_plus[r] - u_minus[r]);
        }
        out[r] = f;
    }
}

/// Shared inputs of the divergence kernels.
pub struct FluxContext<'a> {
    pub mesh: &'a Mesh,
    pub op: &'a PnOperator,
    pub recon: Reconstruction,
    pub epsilon: f64,
}

impl FluxContext<'_> {
    fn matrices(&self, side: Side) -> (&FluxMatrix, &FluxMatrix) {
        match side {
            Side::Low => (&self.op.x_low, &self.op.z_low),
            Side::Up => (&self.op.x_up, &self.op.z_up),
        }
    }

    #[inline]
    fn dissipates(&self, side: Side, row: usize) -> bool {
        match side {
            Side::Up => true,
            Side::Low => self.op.basis.degree(row) == self.op.basis.order,
        }
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn interface_flux_rows(
    ctx: &FluxContext,
    mat: &FluxMatrix,
    side: Side,
    um: &[f64],
    up: &[f64],
    alpha: f64,
    rows: std::ops::Range<usize>,
    out: &mut [f64],
) {
    for r in rows.clone() {
        let mut acc = 0.0;
        for &(c, v) in &mat.rows[r] {
            acc += v * (um[c] + up[c]);
        }
        let mut f = 0.5 * acc;
        if ctx.dissipates(side, r) {
            f += 0.5 * alpha * (up[r] - um[r]);
        }
        out[r - rows.start] = f;
    }
}

/// Reconstruct the two interface states that straddle the interface
/// between cells `a` and `b` (`b` is the `+1` neighbor along `axis`).
#[inline]
#[allow(clippy::too_many_arguments)]
fn interface_states(
    field: &MomentField,
    recon: Reconstruction,
    axis: usize,
    i: isize,
    j: isize,
    comps: std::ops::Range<usize>,
    um: &mut [f64],
    up: &mut [f64],
) {
    // cells a-1, a, b, b+1 along the axis
    let fetch = |di: isize, k: usize| -> f64 {
        if axis == 0 {
            field.value(i + di, j, k)
        } else {
            field.value(i, j + di, k)
        }
    };
    for k in comps {
        let a_m1 = fetch(-1, k);
        let a_0 = fetch(0, k);
        let b_0 = fetch(1, k);
        let b_p1 = fetch(2, k);
        um[k] = recon.edges(a_m1, a_0, b_0).1;
        up[k] = recon.edges(a_0, b_0, b_p1).0;
    }
}

/// Per-cell divergence of the side fluxes, restricted to the moment
/// rows `rows`. `recon_comps` must cover every column read by those
/// rows plus the rows themselves (for the dissipation term).
///
/// `out` is interior-indexed (`nx * nz * nm`); only `rows` entries of
/// each cell are written. The flux carries no epsilon factor here; the
/// integrators scale it.
pub fn divergence_rows(
    ctx: &FluxContext,
    side: Side,
    field: &MomentField,
    sigma_t: &ScalarField,
    rows: std::ops::Range<usize>,
    recon_comps: std::ops::Range<usize>,
    out: &mut [f64],
) {
    let nm = field.nm;
    let nx = field.nx;
    let (xmat, zmat) = ctx.matrices(side);
    let inv_eps2 = 1.0 / (ctx.epsilon * ctx.epsilon);
    let two_d = ctx.mesh.geometry == Geometry::PlaneXz;
    let dx = ctx.mesh.dx;
    let dz = ctx.mesh.dz;

    crate::par::for_each_chunk(out, nm, |cell, chunk| {
        let i = (cell % nx) as isize;
        let j = (cell / nx) as isize;
        let mut um = [0.0f64; MAX_MOMENTS];
        let mut up = [0.0f64; MAX_MOMENTS];
        let mut f_lo = [0.0f64; MAX_MOMENTS];
        let mut f_hi = [0.0f64; MAX_MOMENTS];
        let nr = rows.len();

        // x direction
        for (side_idx, base) in [(-1isize, 0usize), (0, 1)] {
            let a = i + side_idx;
            interface_states(
                field,
                ctx.recon,
                0,
                a,
                j,
                recon_comps.clone(),
                &mut um,
                &mut up,
            );
            let sbar = 0.5 * (sigma_t.get(a, j) + sigma_t.get(a + 1, j));
            let alpha = (-sbar * inv_eps2).exp();
            let dst = if base == 0 { &mut f_lo } else { &mut f_hi };
            interface_flux_rows(ctx, xmat, side, &um, &up, alpha, rows.clone(), dst);
        }
        for (r, o) in rows.clone().zip(0..nr) {
            chunk[r] = (f_hi[o] - f_lo[o]) / dx;
        }

        if two_d {
            for (side_idx, base) in [(-1isize, 0usize), (0, 1)] {
                let a = j + side_idx;
                interface_states(
                    field,
                    ctx.recon,
                    1,
                    i,
                    a,
                    recon_comps.clone(),
                    &mut um,
                    &mut up,
                );
                let sbar = 0.5 * (sigma_t.get(i, a) + sigma_t.get(i, a + 1));
                let alpha = (-sbar * inv_eps2).exp();
                let dst = if base == 0 { &mut f_lo } else { &mut f_hi };
                interface_flux_rows(ctx, zmat, side, &um, &up, alpha, rows.clone(), dst);
            }
            for (r, o) in rows.clone().zip(0..nr) {
                chunk[r] += (f_hi[o] - f_lo[o]) / dz;
            }
        }
    });
}

/// Net outflow of the zeroth-moment up-side flux through each domain
/// boundary, integrated over the boundary (positive = leaving).
///
/// Used by the energy accounting: the total-energy update couples to
/// the boundary exactly through these interface fluxes.
pub fn boundary_net_outflow_row0(
    ctx: &FluxContext,
    field: &MomentField,
    sigma_t: &ScalarField,
) -> f64 {
    let nm = field.nm;
    let inv_eps2 = 1.0 / (ctx.epsilon * ctx.epsilon);
    let (xmat, zmat) = ctx.matrices(Side::Up);
    let mut um = vec![0.0f64; nm];
    let mut up = vec![0.0f64; nm];
    let mut flux = vec![0.0f64; 1];
    let mut total = 0.0;

    let nx = field.nx as isize;
    let nz = field.nz as isize;
    for j in 0..nz {
        // x_lo interface (-1 | 0): outflow is -F
        interface_states(field, ctx.recon, 0, -1, j, 0..nm, &mut um, &mut up);
        let sbar = 0.5 * (sigma_t.get(-1, j) + sigma_t.get(0, j));
        interface_flux_rows(
            ctx,
            xmat,
            Side::Up,
            &um,
            &up,
            (-sbar * inv_eps2).exp(),
            0..1,
            &mut flux,
        );
        total -= flux[0] * ctx.mesh.dz;
        // x_hi interface (nx-1 | nx): outflow is +F
        interface_states(field, ctx.recon, 0, nx - 1, j, 0..nm, &mut um, &mut up);
        let sbar = 0.5 * (sigma_t.get(nx - 1, j) + sigma_t.get(nx, j));
        interface_flux_rows(
            ctx,
            xmat,
            Side::Up,
            &um,
            &up,
            (-sbar * inv_eps2).exp(),
            0..1,
            &mut flux,
        );
        total += flux[0] * ctx.mesh.dz;
    }
    if ctx.mesh.geometry == Geometry::PlaneXz {
        for i in 0..nx {
            interface_states(field, ctx.recon, 1, i, -1, 0..nm, &mut um, &mut up);
            let sbar = 0.5 * (sigma_t.get(i, -1) + sigma_t.get(i, 0));
            interface_flux_rows(
                ctx,
                zmat,
                Side::Up,
                &um,
                &up,
                (-sbar * inv_eps2).exp(),
                0..1,
                &mut flux,
            );
            total -= flux[0] * ctx.mesh.dx;
            interface_states(field, ctx.recon, 1, i, nz - 1, 0..nm, &mut um, &mut up);
            let sbar = 0.5 * (sigma_t.get(i, nz - 1) + sigma_t.get(i, nz));
            interface_flux_rows(
                ctx,
                zmat,
                Side::Up,
                &um,
                &up,
                (-sbar * inv_eps2).exp(),
                0..1,
                &mut flux,
            );
            total += flux[0] * ctx.mesh.dx;
        }
    }
    total
}

//! Angular basis bookkeeping and assembly of the moment flux operators.
//!
//! The slab geometry expands the intensity in Legendre polynomials
//! `P_l(mu)` with non-normalized moments `I_l = ∫ P_l I dmu`. The
//! plane geometry uses the real orthonormal spherical harmonics
//! `S_l^m` with moments scaled so that the zeroth moment equals the
//! angle-integrated intensity, `I_0^0 = ∫ I dΩ`. With that scaling the
//! energy density is `E = I_0^0 / c` and the emission source enters the
//! `(0,0)` equation as `a c T^4` with no leftover angular factors.
//!
//! All flux matrices are assembled from closed-form recurrence
//! coefficients; an independent quadrature of the advection operator
//! against basis pairs serves as the test oracle.

use crate::error::{Error, Result};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Relative agreement required between two successive quadrature
/// resolutions before a table is accepted.
pub const QUAD_LADDER_TOL: f64 = 1e-12;

/// Spatial symmetry of the transport problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// One spatial dimension, intensity depends on `mu = cos(theta)` only.
    Slab1d,
    /// Two spatial dimensions (x, z), full sphere of directions.
    PlaneXz,
}

/// Degree/order pair of one moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentIndex {
    pub l: usize,
    pub m: i32,
}

/// Canonical moment ordering for a given geometry and truncation order.
///
/// Degree-major, order ascending within a degree: the flat indices of
/// degree `l` occupy the contiguous block `l*l..(l+1)*(l+1)` in 2D and
/// the single slot `l` in 1D.
#[derive(Debug, Clone)]
pub struct MomentBasis {
    pub geometry: Geometry,
    pub order: usize,
    pub n_moments: usize,
    indices: Vec<MomentIndex>,
}

impl MomentBasis {
    pub fn new(geometry: Geometry, order: usize) -> Self {
        assert!(order >= 1, "truncation order must be at least 1");
        let mut indices = Vec::new();
        match geometry {
            Geometry::Slab1d => {
                for l in 0..=order {
                    indices.push(MomentIndex { l, m: 0 });
                }
            }
            Geometry::PlaneXz => {
                for l in 0..=order {
                    for m in -(l as i32)..=(l as i32) {
                        indices.push(MomentIndex { l, m });
                    }
                }
            }
        }
        let n_moments = indices.len();
        MomentBasis {
            geometry,
            order,
            n_moments,
            indices,
        }
    }

    /// Flat index of the `(l, m)` moment; rejects out-of-range pairs.
    pub fn flat(&self, l: usize, m: i32) -> Result<usize> {
        if l > self.order || m.unsigned_abs() as usize > l {
            return Err(Error::Setup(format!(
                "moment index (l={l}, m={m}) out of range for order {}",
                self.order
            )));
        }
        match self.geometry {
            Geometry::Slab1d => {
                if m != 0 {
                    return Err(Error::Setup(format!(
                        "slab geometry has m = 0 only, got m = {m}"
                    )));
                }
                Ok(l)
            }
            Geometry::PlaneXz => Ok(l * l + (m + l as i32) as usize),
        }
    }

    pub fn moment(&self, flat: usize) -> MomentIndex {
        self.indices[flat]
    }

    pub fn degree(&self, flat: usize) -> usize {
        self.indices[flat].l
    }

    /// Flat range occupied by all moments of degree `l`.
    pub fn degree_block(&self, l: usize) -> std::ops::Range<usize> {
        match self.geometry {
            Geometry::Slab1d => l..l + 1,
            Geometry::PlaneXz => l * l..(l + 1) * (l + 1),
        }
    }

    /// Value of the `flat`-th basis function at direction `(mu, phi)`.
    ///
    /// Slab: `P_l(mu)`. Plane: real orthonormal harmonic `S_l^m`.
    pub fn basis_value(&self, flat: usize, mu: f64, phi: f64) -> f64 {
        let idx = self.indices[flat];
        match self.geometry {
            Geometry::Slab1d => legendre(idx.l, mu),
            Geometry::PlaneXz => real_harmonic(idx.l, idx.m, mu, phi),
        }
    }

    /// Weight that turns an intensity sample into its moment
    /// contribution: `I_k = ∫ project_weight(k) I`.
    pub fn project_weight(&self, flat: usize, mu: f64, phi: f64) -> f64 {
        match self.geometry {
            Geometry::Slab1d => self.basis_value(flat, mu, phi),
            Geometry::PlaneXz => 2.0 * std::f64::consts::PI.sqrt() * self.basis_value(flat, mu, phi),
        }
    }

    /// Weight that turns moments back into an intensity value:
    /// `I(dir) = Σ_k coeffs[k] · evaluate_weight(k, dir)`.
    pub fn evaluate_weight(&self, flat: usize, mu: f64, phi: f64) -> f64 {
        match self.geometry {
            Geometry::Slab1d => {
                let l = self.indices[flat].l as f64;
                (2.0 * l + 1.0) / 2.0 * self.basis_value(flat, mu, phi)
            }
            Geometry::PlaneXz => {
                self.basis_value(flat, mu, phi) / (2.0 * std::f64::consts::PI.sqrt())
            }
        }
    }

    /// Intensity of a unit isotropic field (one whose zeroth moment is 1).
    pub fn isotropic_intensity(&self) -> f64 {
        match self.geometry {
            Geometry::Slab1d => 0.5,
            Geometry::PlaneXz => 1.0 / FOUR_PI,
        }
    }
}

/// Finite partial sum of the angular expansion at one direction.
pub fn evaluate_intensity(basis: &MomentBasis, coeffs: &[f64], mu: f64, phi: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * basis.evaluate_weight(k, mu, phi))
        .sum()
}

/// Moments of an arbitrary angular function, by converged quadrature.
pub fn project_function<F: Fn(f64, f64) -> f64>(basis: &MomentBasis, f: F) -> Result<Vec<f64>> {
    let b = basis.clone();
    quad_ladder(
        basis.geometry,
        basis.order,
        AngularRange::Full,
        "project_function",
        |quad| {
            let mut out = vec![0.0; b.n_moments];
            for (&(mu, phi), &w) in quad.dirs.iter().zip(&quad.weights) {
                let fv = f(mu, phi);
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * fv * b.project_weight(k, mu, phi);
                }
            }
            out
        },
    )
}

// ---------------------------------------------------------------------------
// Closed-form coupling coefficients
// ---------------------------------------------------------------------------

/// The six square-root couplings of the moment advection recurrences.
#[derive(Debug, Clone, Copy)]
pub struct CouplingCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

fn root_or_zero(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Closed-form couplings at degree `l`, order `m`. Factors that go
/// non-positive under a root denote an absent term and yield zero.
pub fn coupling_coefficients(l: usize, m: i32) -> CouplingCoefficients {
    let lf = l as f64;
    let mf = m as f64;
    let d0 = (2.0 * lf + 3.0) * (2.0 * lf + 1.0);
    let d1 = (2.0 * lf + 1.0) * (2.0 * lf - 1.0);
    CouplingCoefficients {
        a: root_or_zero((lf - mf + 1.0) * (lf + mf + 1.0), d0),
        b: root_or_zero((lf - mf) * (lf + mf), d1),
        c: root_or_zero((lf + mf + 1.0) * (lf + mf + 2.0), d0),
        d: root_or_zero((lf - mf) * (lf - mf - 1.0), d1),
        e: root_or_zero((lf - mf + 1.0) * (lf - mf + 2.0), d0),
        f: root_or_zero((lf + mf) * (lf + mf - 1.0), d1),
    }
}

// ---------------------------------------------------------------------------
// Flux operators
// ---------------------------------------------------------------------------

/// Sparse rows of one coupling matrix.
#[derive(Debug, Clone, Default)]
pub struct FluxMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl FluxMatrix {
    fn empty(n: usize) -> Self {
        FluxMatrix {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    fn push(&mut self, row: usize, col: usize, val: f64) {
        if val != 0.0 {
            self.rows[row].push((col, val));
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                dense[r * self.n + c] += v;
            }
        }
        dense
    }

    /// `out[r] = Σ_c M[r,c] u[c]` restricted to the given rows.
    pub fn apply_rows(&self, rows: std::ops::Range<usize>, u: &[f64], out: &mut [f64]) {
        for r in rows {
            let mut acc = 0.0;
            for &(c, v) in &self.rows[r] {
                acc += v * u[c];
            }
            out[r] = acc;
        }
    }
}

/// Advection matrices of the moment system, split by the degree of the
/// column they couple to: `low` rows reach degree `l - 1`, `up` rows
/// reach degree `l + 1`. Rows of degree `order` have no up coupling,
/// which is the truncation closure.
#[derive(Debug, Clone)]
pub struct PnOperator {
    pub basis: MomentBasis,
    pub x_low: FluxMatrix,
    pub x_up: FluxMatrix,
    pub z_low: FluxMatrix,
    pub z_up: FluxMatrix,
    /// Flat index of the moment that receives the emission source.
    pub source_index: usize,
}

impl PnOperator {
    /// Slab-geometry operator from the Legendre recurrence
    /// `mu P_l = ((l+1) P_{l+1} + l P_{l-1}) / (2l+1)`.
    pub fn new_1d(order: usize) -> Self {
        let basis = MomentBasis::new(Geometry::Slab1d, order);
        let n = basis.n_moments;
        let mut x_low = FluxMatrix::empty(n);
        let mut x_up = FluxMatrix::empty(n);
        for l in 0..=order {
            let lf = l as f64;
            if l >= 1 {
                x_low.push(l, l - 1, lf / (2.0 * lf + 1.0));
            }
            if l + 1 <= order {
                x_up.push(l, l + 1, (lf + 1.0) / (2.0 * lf + 1.0));
            }
        }
        PnOperator {
            basis,
            x_low,
            x_up,
            z_low: FluxMatrix::empty(n),
            z_up: FluxMatrix::empty(n),
            source_index: 0,
        }
    }

    /// Plane-geometry operator in the real harmonic basis.
    ///
    /// The z matrices follow the `A`/`B` recurrence unchanged. The x
    /// matrices are the real-basis image of the `C`/`D`/`E`/`F`
    /// couplings: transitions that touch `m = 0` pick up a factor
    /// `sqrt(2)` and the cosine/sine blocks do not mix.
    pub fn new_2d(order: usize) -> Self {
        let basis = MomentBasis::new(Geometry::PlaneXz, order);
        let n = basis.n_moments;
        let mut x_low = FluxMatrix::empty(n);
        let mut x_up = FluxMatrix::empty(n);
        let mut z_low = FluxMatrix::empty(n);
        let mut z_up = FluxMatrix::empty(n);
        let sqrt2 = std::f64::consts::SQRT_2;
        let flat = |l: usize, m: i32| basis.flat(l, m).expect("index in range");

        for k in 0..n {
            let MomentIndex { l, m } = basis.moment(k);
            // z direction: cos(theta) keeps m and shifts l by one.
            if l >= 1 && (l - 1) as i32 >= m.abs() {
                z_low.push(k, flat(l - 1, m), coupling_coefficients(l - 1, m).a);
            }
            if l + 1 <= order {
                z_up.push(k, flat(l + 1, m), coupling_coefficients(l + 1, m).b);
            }
            // x direction: sin(theta)cos(phi) shifts |m| by one within a block.
            let cc = coupling_coefficients(l, m.abs());
            if m >= 0 {
                let mu = m as usize;
                // toward |m| + 1
                let enh = if mu == 0 { sqrt2 } else { 1.0 };
                if l + 1 <= order {
                    x_up.push(k, flat(l + 1, m + 1), enh * cc.c / 2.0);
                }
                if l >= 1 && l - 1 >= mu + 1 {
                    x_low.push(k, flat(l - 1, m + 1), -enh * cc.d / 2.0);
                }
                // toward |m| - 1
                if mu >= 1 {
                    let enh = if mu == 1 { sqrt2 } else { 1.0 };
                    if l >= 1 {
                        x_low.push(k, flat(l - 1, m - 1), enh * cc.f / 2.0);
                    }
                    if l + 1 <= order {
                        x_up.push(k, flat(l + 1, m - 1), -enh * cc.e / 2.0);
                    }
                }
            } else {
                let mu = (-m) as usize;
                if l + 1 <= order {
                    x_up.push(k, flat(l + 1, -(mu as i32 + 1)), cc.c / 2.0);
                }
                if l >= 1 && l - 1 >= mu + 1 {
                    x_low.push(k, flat(l - 1, -(mu as i32 + 1)), -cc.d / 2.0);
                }
                if mu >= 2 {
                    if l >= 1 {
                        x_low.push(k, flat(l - 1, -(mu as i32 - 1)), cc.f / 2.0);
                    }
                    if l + 1 <= order {
                        x_up.push(k, flat(l + 1, -(mu as i32 - 1)), -cc.e / 2.0);
                    }
                }
            }
        }
        PnOperator {
            basis,
            x_low,
            x_up,
            z_low,
            z_up,
            source_index: 0,
        }
    }

    pub fn n_moments(&self) -> usize {
        self.basis.n_moments
    }
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let mut pm1 = 1.0;
            let mut p = x;
            for k in 1..l {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
                pm1 = p;
                p = next;
            }
            p
        }
    }
}

/// Associated Legendre `P_l^m(x)` without the Condon-Shortley phase,
/// `m >= 0`.
fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l);
    // P_m^m = (2m-1)!! (1-x^2)^{m/2}
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = pmm;
    let mut p = x * (2.0 * m as f64 + 1.0) * pmm;
    if l == m + 1 {
        return p;
    }
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let next = (x * (2.0 * lf - 1.0) * p - (lf + mf - 1.0) * pm1) / (lf - mf);
        pm1 = p;
        p = next;
    }
    p
}

/// Orthonormality constant of `S_l^m` (without the sqrt(2) of `m != 0`).
fn harmonic_norm(l: usize, m: usize) -> f64 {
    // sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!), with the factorial ratio as
    // a running product to avoid overflow.
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2.0 * l as f64 + 1.0) / FOUR_PI * ratio).sqrt()
}

/// Real orthonormal spherical harmonic `S_l^m(mu, phi)`.
pub fn real_harmonic(l: usize, m: i32, mu: f64, phi: f64) -> f64 {
    let ma = m.unsigned_abs() as usize;
    let base = harmonic_norm(l, ma) * assoc_legendre(l, ma, mu);
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => base,
        std::cmp::Ordering::Greater => {
            std::f64::consts::SQRT_2 * base * (ma as f64 * phi).cos()
        }
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * base * (ma as f64 * phi).sin(),
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut pm1 = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
        pm1 = p;
        p = next;
    }
    let dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, dp)
}

/// Directions and weights for integrals over (a part of) the sphere,
/// or over `mu` in slab geometry.
#[derive(Debug, Clone)]
pub struct AngularQuad {
    /// `(mu, phi)` pairs; slab geometry carries `phi = 0`.
    pub dirs: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// Angular sub-domain selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularRange {
    Full,
    /// Directions with `Omega_x > 0` (2D) or `mu > 0` (1D).
    XPositive,
    XNegative,
    /// Directions with `Omega_z > 0`; 2D only.
    ZPositive,
    ZNegative,
}

/// Tensor quadrature: Gauss-Legendre in `cos(theta)` crossed with a
/// uniform (trapezoid on the periodic circle) rule in `phi`, restricted
/// to the requested half-space. `level` doubles the resolution.
pub fn angular_quad(geometry: Geometry, order: usize, range: AngularRange, level: u32) -> AngularQuad {
    let res = ((2 * order + 6) << level).max(8);
    match geometry {
        Geometry::Slab1d => {
            let (lo, hi) = match range {
                AngularRange::Full => (-1.0, 1.0),
                AngularRange::XPositive => (0.0, 1.0),
                AngularRange::XNegative => (-1.0, 0.0),
                _ => panic!("z half-ranges are undefined in slab geometry"),
            };
            let (nodes, weights) = gauss_legendre(res);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            AngularQuad {
                dirs: nodes.iter().map(|&t| (mid + half * t, 0.0)).collect(),
                weights: weights.iter().map(|&w| w * half).collect(),
            }
        }
        Geometry::PlaneXz => {
            let (mu_lo, mu_hi) = match range {
                AngularRange::ZPositive => (0.0, 1.0),
                AngularRange::ZNegative => (-1.0, 0.0),
                _ => (-1.0, 1.0),
            };
            let (nodes, nw) = gauss_legendre(res);
            let half = 0.5 * (mu_hi - mu_lo);
            let mid = 0.5 * (mu_hi + mu_lo);
            let mus: Vec<(f64, f64)> = nodes
                .iter()
                .zip(&nw)
                .map(|(&t, &w)| (mid + half * t, w * half))
                .collect();

            // phi rule: uniform midpoints on the full circle are exact
            // for trigonometric polynomials; x half-spaces use
            // Gauss-Legendre on the half circle instead.
            let n_phi = 2 * res;
            let phis: Vec<(f64, f64)> = match range {
                AngularRange::XPositive | AngularRange::XNegative => {
                    let (pn, pw) = gauss_legendre(n_phi);
                    let (c, h) = if range == AngularRange::XPositive {
                        (0.0, std::f64::consts::FRAC_PI_2)
                    } else {
                        (std::f64::consts::PI, std::f64::consts::FRAC_PI_2)
                    };
                    pn.iter().zip(&pw).map(|(&t, &w)| (c + h * t, w * h)).collect()
                }
                _ => {
                    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
                    (0..n_phi)
                        .map(|k| ((k as f64 + 0.5) * dphi, dphi))
                        .collect()
                }
            };

            let mut dirs = Vec::with_capacity(mus.len() * phis.len());
            let mut weights = Vec::with_capacity(mus.len() * phis.len());
            for &(mu, wmu) in &mus {
                for &(phi, wphi) in &phis {
                    dirs.push((mu, phi));
                    weights.push(wmu * wphi);
                }
            }
            AngularQuad { dirs, weights }
        }
    }
}

/// Evaluate `build` at doubling resolutions until two successive
/// results agree to [`QUAD_LADDER_TOL`]; exhausting the ladder is a
/// hard failure.
pub fn quad_ladder<F>(
    geometry: Geometry,
    order: usize,
    range: AngularRange,
    context: &str,
    build: F,
) -> Result<Vec<f64>>
where
    F: Fn(&AngularQuad) -> Vec<f64>,
{
    let mut prev: Option<Vec<f64>> = None;
    let mut delta = f64::INFINITY;
    for level in 0..6 {
        let quad = angular_quad(geometry, order, range, level);
        let cur = build(&quad);
        if let Some(p) = prev {
            delta = p
                .iter()
                .zip(&cur)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = cur.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if delta <= QUAD_LADDER_TOL * scale {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Err(Error::QuadratureNotConverged {
        context: context.to_string(),
        delta,
    })
}

// ---------------------------------------------------------------------------
// Half-sphere boundary tables
// ---------------------------------------------------------------------------

/// Outward normal of a mesh boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutwardNormal {
    XMinus,
    XPlus,
    ZMinus,
    ZPlus,
}

impl OutwardNormal {
    /// Directions leaving the domain through this face.
    fn outgoing(self) -> AngularRange {
        match self {
            OutwardNormal::XMinus => AngularRange::XNegative,
            OutwardNormal::XPlus => AngularRange::XPositive,
            OutwardNormal::ZMinus => AngularRange::ZNegative,
            OutwardNormal::ZPlus => AngularRange::ZPositive,
        }
    }

    fn incoming(self) -> AngularRange {
        match self {
            OutwardNormal::XMinus => AngularRange::XPositive,
            OutwardNormal::XPlus => AngularRange::XNegative,
            OutwardNormal::ZMinus => AngularRange::ZPositive,
            OutwardNormal::ZPlus => AngularRange::ZNegative,
        }
    }

}

/// Precomputed half-range integrals used by inflow/vacuum ghost cells.
///
/// `ghost = planck_inflow * (a c T_b^4) + overlap * interior_moments`
/// reproduces a ghost intensity that is the boundary source on incoming
/// directions and the interior solution on outgoing ones.
#[derive(Debug, Clone)]
pub struct HalfSphereTable {
    pub normal: OutwardNormal,
    pub n: usize,
    /// Row-major `n x n`: moment response to interior moments over the
    /// outgoing half-range.
    pub overlap: Vec<f64>,
    /// Moments of a unit isotropic source (`a c T_b^4 = 1`) over the
    /// incoming half-range.
    pub planck_inflow: Vec<f64>,
}

impl HalfSphereTable {
    pub fn build(basis: &MomentBasis, normal: OutwardNormal) -> Result<Self> {
        if basis.geometry == Geometry::Slab1d
            && matches!(normal, OutwardNormal::ZMinus | OutwardNormal::ZPlus)
        {
            return Err(Error::Setup(
                "slab geometry has x boundaries only".to_string(),
            ));
        }
        let n = basis.n_moments;

        let b = basis.clone();
        let overlap = quad_ladder(
            basis.geometry,
            basis.order,
            normal.outgoing(),
            &format!("half-sphere overlap, normal {normal:?}"),
            |quad| {
                let mut out = vec![0.0; n * n];
                for (&(mu, phi), &w) in quad.dirs.iter().zip(&quad.weights) {
                    for r in 0..n {
                        let pr = b.project_weight(r, mu, phi);
                        if pr == 0.0 {
                            continue;
                        }
                        for c in 0..n {
                            out[r * n + c] += w * pr * b.evaluate_weight(c, mu, phi);
                        }
                    }
                }
                out
            },
        )?;

        let iso = basis.isotropic_intensity();
        let b = basis.clone();
        let planck_inflow = quad_ladder(
            basis.geometry,
            basis.order,
            normal.incoming(),
            &format!("half-sphere inflow, normal {normal:?}"),
            |quad| {
                let mut out = vec![0.0; n];
                for (&(mu, phi), &w) in quad.dirs.iter().zip(&quad.weights) {
                    for (r, o) in out.iter_mut().enumerate() {
                        *o += w * iso * b.project_weight(r, mu, phi);
                    }
                }
                out
            },
        )?;

        Ok(HalfSphereTable {
            normal,
            n,
            overlap,
            planck_inflow,
        })
    }

    /// Ghost moments for a Planckian inflow of strength `act4 = a c T_b^4`
    /// facing interior moments `interior`.
    pub fn ghost_moments(&self, act4: f64, interior: &[f64], out: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = self.planck_inflow[r] * act4;
            let row = &self.overlap[r * self.n..(r + 1) * self.n];
            for (c, &ov) in row.iter().enumerate() {
                acc += ov * interior[c];
            }
            out[r] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn coupling_examples() {
        approx(coupling_coefficients(1, 0).b, (1.0f64 / 3.0).sqrt(), 1e-15);
        approx(coupling_coefficients(1, 1).f, (2.0f64 / 3.0).sqrt(), 1e-15);
        approx(coupling_coefficients(1, 1).a, (1.0f64 / 5.0).sqrt(), 1e-15);
        // invalid radicals vanish
        assert_eq!(coupling_coefficients(0, 0).b, 0.0);
        assert_eq!(coupling_coefficients(1, 1).d, 0.0);
    }

    #[test]
    fn flat_ordering() {
        let b = MomentBasis::new(Geometry::PlaneXz, 3);
        assert_eq!(b.flat(0, 0).unwrap(), 0);
        assert_eq!(b.flat(1, -1).unwrap(), 1);
        assert_eq!(b.flat(3, 3).unwrap(), 15);
        assert_eq!(b.n_moments, 16);
        assert!(b.flat(2, 3).is_err());
        assert!(b.flat(4, 0).is_err());
        let s = MomentBasis::new(Geometry::Slab1d, 7);
        assert_eq!(s.flat(7, 0).unwrap(), 7);
        assert!(s.flat(1, 1).is_err());
        for k in 0..b.n_moments {
            let mi = b.moment(k);
            assert_eq!(b.flat(mi.l, mi.m).unwrap(), k);
        }
    }

    #[test]
    fn operator_1d_entries() {
        let op = PnOperator::new_1d(2);
        let d_up = op.x_up.to_dense();
        let d_low = op.x_low.to_dense();
        let n = 3;
        // printed up formula i/(2(i-1)+1) at i = 1 gives 1
        approx(d_up[0 * n + 1], 1.0, 1e-15);
        // recurrence value for the coupling from I_0 into the I_1 equation
        approx(d_low[1 * n + 0], 1.0 / 3.0, 1e-15);
        approx(d_up[1 * n + 2], 2.0 / 3.0, 1e-15);
        approx(d_low[2 * n + 1], 2.0 / 5.0, 1e-15);
        // top degree has no up coupling
        assert!(op.x_up.rows[2].is_empty());
    }

    #[test]
    fn printed_up_formula_matches_recurrence() {
        // Regression: the published up-triangle formula agrees with the
        // recurrence for every order; the low formula does not (its
        // index is shifted) and is deliberately not used.
        let op = PnOperator::new_1d(9);
        let dense = op.x_up.to_dense();
        let n = op.n_moments();
        for i in 1..=9usize {
            let printed = i as f64 / (2.0 * (i as f64 - 1.0) + 1.0);
            approx(dense[(i - 1) * n + i], printed, 1e-15);
        }
    }

    #[test]
    fn operator_2d_low_up_structure() {
        let op = PnOperator::new_2d(3);
        let b = &op.basis;
        for k in 0..b.n_moments {
            let l = b.degree(k);
            for &(c, _) in &op.x_low.rows[k] {
                assert_eq!(b.degree(c), l - 1);
            }
            for &(c, _) in &op.z_low.rows[k] {
                assert_eq!(b.degree(c), l - 1);
            }
            for &(c, _) in &op.x_up.rows[k] {
                assert_eq!(b.degree(c), l + 1);
            }
            for &(c, _) in &op.z_up.rows[k] {
                assert_eq!(b.degree(c), l + 1);
            }
            if l == 3 {
                assert!(op.x_up.rows[k].is_empty() && op.z_up.rows[k].is_empty());
            }
        }
    }

    #[test]
    fn operator_2d_m1_examples() {
        let op = PnOperator::new_2d(1);
        let b = &op.basis;
        let n = b.n_moments;
        let zu = op.z_up.to_dense();
        // single entry B_1^0 at column (1,0)
        let col = b.flat(1, 0).unwrap();
        for c in 0..n {
            let expect = if c == col { (1.0f64 / 3.0).sqrt() } else { 0.0 };
            approx(zu[c], expect, 1e-15);
        }
        assert!(op.x_low.rows[0].is_empty() && op.z_low.rows[0].is_empty());
    }

    /// Every operator entry equals the quadrature of the advection
    /// operator against basis pairs (small order here; the acceptance
    /// suite sweeps the full range).
    #[test]
    fn operator_2d_matches_quadrature_oracle() {
        let order = 3;
        let op = PnOperator::new_2d(order);
        let b = &op.basis;
        let n = b.n_moments;
        let quad = angular_quad(Geometry::PlaneXz, order, AngularRange::Full, 1);
        let mut ox = vec![0.0; n * n];
        let mut oz = vec![0.0; n * n];
        for (&(mu, phi), &w) in quad.dirs.iter().zip(&quad.weights) {
            let st = (1.0 - mu * mu).max(0.0).sqrt();
            let omega_x = st * phi.cos();
            for r in 0..n {
                let pr = b.project_weight(r, mu, phi);
                for c in 0..n {
                    let ev = b.evaluate_weight(c, mu, phi);
                    ox[r * n + c] += w * pr * omega_x * ev;
                    oz[r * n + c] += w * pr * mu * ev;
                }
            }
        }
        let ax: Vec<f64> = op
            .x_low
            .to_dense()
            .iter()
            .zip(op.x_up.to_dense())
            .map(|(a, b)| a + b)
            .collect();
        let az: Vec<f64> = op
            .z_low
            .to_dense()
            .iter()
            .zip(op.z_up.to_dense())
            .map(|(a, b)| a + b)
            .collect();
        for i in 0..n * n {
            approx(ax[i], ox[i], 1e-10);
            approx(az[i], oz[i], 1e-10);
        }
    }

    #[test]
    fn evaluate_project_round_trip() {
        let b = MomentBasis::new(Geometry::PlaneXz, 4);
        let mut coeffs = vec![0.0; b.n_moments];
        // deterministic pseudo-random band-limited coefficients
        let mut s = 0.42f64;
        for c in coeffs.iter_mut() {
            s = (s * 997.0 + 0.123).fract();
            *c = 2.0 * s - 1.0;
        }
        let bc = b.clone();
        let cc = coeffs.clone();
        let back = project_function(&b, move |mu, phi| evaluate_intensity(&bc, &cc, mu, phi))
            .unwrap();
        for (a, v) in coeffs.iter().zip(&back) {
            approx(*a, *v, 1e-10);
        }

        let b1 = MomentBasis::new(Geometry::Slab1d, 7);
        let mut c1 = vec![0.0; b1.n_moments];
        for (k, c) in c1.iter_mut().enumerate() {
            *c = (k as f64 * 0.37).sin();
        }
        let bb = b1.clone();
        let cb = c1.clone();
        let back1 =
            project_function(&b1, move |mu, _| evaluate_intensity(&bb, &cb, mu, 0.0)).unwrap();
        for (a, v) in c1.iter().zip(&back1) {
            approx(*a, *v, 1e-10);
        }
    }

    #[test]
    fn isotropic_evaluation() {
        let b = MomentBasis::new(Geometry::PlaneXz, 3);
        let mut coeffs = vec![0.0; b.n_moments];
        coeffs[0] = 2.5;
        // only the constant harmonic survives: I = I_0^0 / (4 pi)
        approx(
            evaluate_intensity(&b, &coeffs, 0.3, 1.1),
            2.5 / FOUR_PI,
            1e-14,
        );
        let b1 = MomentBasis::new(Geometry::Slab1d, 3);
        let mut c1 = vec![0.0; 4];
        c1[0] = 2.5;
        approx(evaluate_intensity(&b1, &c1, -0.7, 0.0), 1.25, 1e-14);
        approx(evaluate_intensity(&b1, &c1, 0.2, 0.0), 1.25, 1e-14);
    }

    #[test]
    fn zeroth_moment_is_angle_integral() {
        // E = I_0^0 / c holds under the chosen normalization: integrate
        // a random band-limited intensity over the sphere and compare
        // with its zeroth coefficient.
        let b = MomentBasis::new(Geometry::PlaneXz, 3);
        let mut coeffs = vec![0.0; b.n_moments];
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = 0.5 + (k as f64 * 1.7).cos();
        }
        let quad = angular_quad(Geometry::PlaneXz, 3, AngularRange::Full, 1);
        let total: f64 = quad
            .dirs
            .iter()
            .zip(&quad.weights)
            .map(|(&(mu, phi), &w)| w * evaluate_intensity(&b, &coeffs, mu, phi))
            .sum();
        approx(total, coeffs[0], 1e-12);
    }

    #[test]
    fn half_sphere_tables() {
        for geometry in [Geometry::Slab1d, Geometry::PlaneXz] {
            let order = 3;
            let b = MomentBasis::new(geometry, order);
            let n = b.n_moments;
            let (np, nm) = match geometry {
                Geometry::Slab1d => (OutwardNormal::XPlus, OutwardNormal::XMinus),
                Geometry::PlaneXz => (OutwardNormal::ZPlus, OutwardNormal::ZMinus),
            };
            let tp = HalfSphereTable::build(&b, np).unwrap();
            let tm = HalfSphereTable::build(&b, nm).unwrap();
            // opposite halves recombine into full-sphere orthogonality
            for r in 0..n {
                for c in 0..n {
                    let sum = tp.overlap[r * n + c] + tm.overlap[r * n + c];
                    let expect = if r == c { 1.0 } else { 0.0 };
                    approx(sum, expect, 1e-12);
                }
            }
            // hemisphere halves the (0,0) self-overlap
            approx(tp.overlap[0], 0.5, 1e-12);

            // isotropic interior against the matching inflow rebuilds
            // the full isotropic moment in the ghost
            let mut interior = vec![0.0; n];
            interior[0] = 1.0;
            let mut ghost = vec![0.0; n];
            tp.ghost_moments(1.0, &interior, &mut ghost);
            approx(ghost[0], 1.0, 1e-12);
            for (k, g) in ghost.iter().enumerate().skip(1) {
                let _ = k;
                approx(*g, 0.0, 1e-12);
            }
        }
    }

    #[test]
    fn half_sphere_z_value() {
        // overlap between (1,0) and (0,0) over the upper hemisphere:
        // integral of sqrt(3/4pi) mu / (2 sqrt(pi)) * 2 sqrt(pi) ... =
        // sqrt(3)/4 in the moment normalization.
        let b = MomentBasis::new(Geometry::PlaneXz, 1);
        let t = HalfSphereTable::build(&b, OutwardNormal::ZPlus).unwrap();
        let r = b.flat(1, 0).unwrap();
        approx(t.overlap[r * b.n_moments], 3.0f64.sqrt() / 4.0, 1e-12);
    }

    #[test]
    fn slab_rejects_z_normal() {
        let b = MomentBasis::new(Geometry::Slab1d, 3);
        assert!(HalfSphereTable::build(&b, OutwardNormal::ZPlus).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(10)).sum();
        approx(integral, 2.0 / 11.0, 1e-13);
        let total: f64 = w.iter().sum();
        approx(total, 2.0, 1e-14);
    }
}

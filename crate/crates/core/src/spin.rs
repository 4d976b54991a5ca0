//! Spin operators, rotations and initial states.
//!
//! Basis conventions used throughout the crate:
//!
//! * a collective spin `J` lives in `|J, m⟩` with `m` descending, so row 0 is
//!   `m = +J` and row `2J` is `m = −J`;
//! * a register of spin-1/2 sites is the Kronecker product
//!   `site_0 ⊗ site_1 ⊗ … ⊗ site_N`, with the central spin at site 0 in the
//!   most significant position. Each site uses `|↑⟩ = 0`, `|↓⟩ = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DdError, Result};
use crate::linalg::{self, c64, CMatrix, HermitianEigen, I};
use crate::operator::{Operator, StateVector};
use crate::sparse::CsrMatrix;

const AXIS_TOL: f64 = 1e-12;

/// A spin quantum number stored as `2J` so half-integers stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinQuantum {
    twice_j: u32,
}

impl SpinQuantum {
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !(j >= 0.5) || (twice - twice.round()).abs() > 1e-9 || !twice.is_finite() {
            return Err(DdError::InvalidSpin(j));
        }
        Ok(Self {
            twice_j: twice.round() as u32,
        })
    }

    pub fn from_twice(twice_j: u32) -> Result<Self> {
        if twice_j == 0 {
            return Err(DdError::InvalidSpin(0.0));
        }
        Ok(Self { twice_j })
    }

    pub fn value(self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice_j
    }

    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    /// `m` for basis row `i`.
    pub fn m(self, i: usize) -> f64 {
        self.value() - i as f64
    }

    /// `⟨m+1|J₊|m⟩` for the row-`i` state (zero for `m = J`).
    pub fn raise_coefficient(self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let j = self.value();
        let m = self.m(i);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

/// `{Jx, Jy, Jz, J²}` for one spin multiplet.
#[derive(Clone, Debug)]
pub struct CollectiveSpin {
    pub spin: SpinQuantum,
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
    pub jsq: Operator,
}

impl CollectiveSpin {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn j(&self) -> f64 {
        self.spin.value()
    }

    /// `axis · J` as a dense matrix.
    pub fn along(&self, axis: [f64; 3]) -> CMatrix {
        self.jx.to_dense() * c64(axis[0])
            + self.jy.to_dense() * c64(axis[1])
            + self.jz.to_dense() * c64(axis[2])
    }
}

/// Standard angular-momentum matrices in the `|J, m⟩` basis.
pub fn collective_spin_operators(j: f64) -> Result<CollectiveSpin> {
    let spin = SpinQuantum::new(j)?;
    let n = spin.dim();
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    let mut tz = Vec::new();
    let mut tsq = Vec::new();
    let casimir = spin.value() * (spin.value() + 1.0);
    for i in 0..n {
        tz.push((i, i, c64(spin.m(i))));
        tsq.push((i, i, c64(casimir)));
        if i > 0 {
            // J+ maps row i to row i-1
            let a = spin.raise_coefficient(i);
            tx.push((i - 1, i, c64(0.5 * a)));
            tx.push((i, i - 1, c64(0.5 * a)));
            // Jy = (J+ - J-)/(2i)
            ty.push((i - 1, i, Complex64::new(0.0, -0.5 * a)));
            ty.push((i, i - 1, Complex64::new(0.0, 0.5 * a)));
        }
    }
    Ok(CollectiveSpin {
        spin,
        jx: Operator::auto(CsrMatrix::from_triplets(n, tx)),
        jy: Operator::auto(CsrMatrix::from_triplets(n, ty)),
        jz: Operator::auto(CsrMatrix::from_triplets(n, tz)),
        jsq: Operator::auto(CsrMatrix::from_triplets(n, tsq)),
    })
}

/// Pauli matrices divided by two: `[Sx, Sy, Sz]`.
pub fn spin_half_matrices() -> [CMatrix; 3] {
    let sx = CMatrix::from_row_slice(2, 2, &[c64(0.0), c64(0.5), c64(0.5), c64(0.0)]);
    let sy = CMatrix::from_row_slice(2, 2, &[c64(0.0), -0.5 * I, 0.5 * I, c64(0.0)]);
    let sz = CMatrix::from_row_slice(2, 2, &[c64(0.5), c64(0.0), c64(0.0), c64(-0.5)]);
    [sx, sy, sz]
}

/// Embeds a 2×2 operator at `site` of an `n_bath + 1` site register.
pub fn single_site_operator(n_bath: usize, site: usize, local: &CMatrix) -> Result<Operator> {
    let sites = n_bath + 1;
    if site >= sites {
        return Err(DdError::SiteOutOfRange { index: site, sites });
    }
    if local.shape() != (2, 2) {
        return Err(DdError::DimensionMismatch {
            expected: 2,
            actual: local.nrows(),
        });
    }
    Ok(Operator::from_sparse(embed_local(n_bath, site, local)))
}

pub(crate) fn embed_local(n_bath: usize, site: usize, local: &CMatrix) -> CsrMatrix {
    let dim = 1usize << (n_bath + 1);
    let shift = n_bath - site;
    let mut t = Vec::new();
    for col in 0..dim {
        let b = (col >> shift) & 1;
        for b_new in 0..2 {
            let v = local[(b_new, b)];
            if v != c64(0.0) {
                let row = (col & !(1 << shift)) | (b_new << shift);
                t.push((row, col, v));
            }
        }
    }
    CsrMatrix::from_triplets(dim, t)
}

/// A rotation by `angle` about a unit `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    axis: [f64; 3],
    angle: f64,
}

impl Rotation {
    /// Normalizes `axis`; fails on a zero axis.
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n < AXIS_TOL || !n.is_finite() {
            return Err(DdError::ZeroAxis);
        }
        Ok(Self {
            axis: [axis[0] / n, axis[1] / n, axis[2] / n],
            angle,
        })
    }

    pub fn x(angle: f64) -> Self {
        Self {
            axis: [1.0, 0.0, 0.0],
            angle,
        }
    }

    pub fn y(angle: f64) -> Self {
        Self {
            axis: [0.0, 1.0, 0.0],
            angle,
        }
    }

    pub fn z(angle: f64) -> Self {
        Self {
            axis: [0.0, 0.0, 1.0],
            angle,
        }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Spin-1/2 representation `cos(θ/2) − i sin(θ/2) n·σ`.
    pub fn su2(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = (0.5 * self.angle).sin_cos();
        let [nx, ny, nz] = self.axis;
        [
            [Complex64::new(c, -s * nz), Complex64::new(-s * ny, -s * nx)],
            [Complex64::new(s * ny, -s * nx), Complex64::new(c, s * nz)],
        ]
    }

    /// SO(3) matrix `R` with `U† J U = R J` for `U = exp(−iθ n·J)`.
    pub fn so3(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.angle.sin_cos();
        let [x, y, z] = self.axis;
        let t = 1.0 - c;
        [
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ]
    }
}

/// `exp(−i angle axis·J)`: closed form for spin-1/2, eigendecomposition otherwise.
pub fn rotation_operator(rot: &Rotation, spin: &CollectiveSpin) -> Operator {
    if spin.spin.twice() == 1 {
        let u = rot.su2();
        return Operator::from_dense(CMatrix::from_row_slice(
            2,
            2,
            &[u[0][0], u[0][1], u[1][0], u[1][1]],
        ));
    }
    let generator = spin.along(rot.axis());
    Operator::from_dense(HermitianEigen::new(&generator).propagator(rot.angle()))
}

/// CSS pointing along `direction` (normalized internally).
///
/// Amplitudes are the closed-form Wigner elements
/// `d^J_{m,J}(θ) e^{−imφ}` evaluated in log space, so large `J` is safe.
pub fn coherent_spin_state(j: f64, direction: [f64; 3]) -> Result<StateVector> {
    let spin = SpinQuantum::new(j)?;
    let n = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    if n < AXIS_TOL {
        return Err(DdError::ZeroAxis);
    }
    let [dx, dy, dz] = [direction[0] / n, direction[1] / n, direction[2] / n];
    let theta = dz.clamp(-1.0, 1.0).acos();
    let phi = dy.atan2(dx);
    let (ls, lc) = ((0.5 * theta).sin().ln(), (0.5 * theta).cos().ln());
    let twice = spin.twice() as usize;
    let mut amps = Vec::with_capacity(twice + 1);
    let mut log_binom = 0.0;
    for k in 0..=twice {
        if k > 0 {
            log_binom += ((twice - k + 1) as f64).ln() - (k as f64).ln();
        }
        let cos_pow = (twice - k) as f64;
        let sin_pow = k as f64;
        let mut log_mag = 0.5 * log_binom;
        // 0^0 = 1
        if cos_pow > 0.0 {
            log_mag += cos_pow * lc;
        }
        if sin_pow > 0.0 {
            log_mag += sin_pow * ls;
        }
        let m = spin.m(k);
        amps.push(Complex64::from_polar(log_mag.exp(), -m * phi));
    }
    StateVector::normalized(amps)
}

/// First and second moments of `J` in a pure state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollectiveMoments {
    pub j: f64,
    /// `⟨J_a⟩`
    pub mean: [f64; 3],
    /// `⟨{J_a, J_b}⟩ / 2`
    pub second: [[f64; 3]; 3],
}

impl CollectiveMoments {
    pub fn zero(j: f64) -> Self {
        Self {
            j,
            mean: [0.0; 3],
            second: [[0.0; 3]; 3],
        }
    }

    pub fn variance(&self, a: usize) -> f64 {
        self.second[a][a] - self.mean[a] * self.mean[a]
    }

    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        self.second[a][b] - self.mean[a] * self.mean[b]
    }

    /// Moments after the state is rotated so that `U† J U = R J`.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Self {
        let mut mean = [0.0; 3];
        for a in 0..3 {
            mean[a] = (0..3).map(|b| r[a][b] * self.mean[b]).sum();
        }
        let mut tmp = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                tmp[a][b] = (0..3).map(|k| r[a][k] * self.second[k][b]).sum();
            }
        }
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                second[a][b] = (0..3).map(|k| tmp[a][k] * r[b][k]).sum();
            }
        }
        Self {
            j: self.j,
            mean,
            second,
        }
    }

    pub(crate) fn add_scaled(&mut self, other: &Self, w: f64) {
        for a in 0..3 {
            self.mean[a] += w * other.mean[a];
            for b in 0..3 {
                self.second[a][b] += w * other.second[a][b];
            }
        }
    }
}

/// `Jx ψ`, `Jy ψ`, `Jz ψ` via the ladder structure in O(dim).
fn apply_components(spin: SpinQuantum, psi: &[Complex64]) -> [Vec<Complex64>; 3] {
    let n = spin.dim();
    let zero = c64(0.0);
    let mut up = vec![zero; n];
    let mut down = vec![zero; n];
    let mut z = vec![zero; n];
    for i in 0..n {
        z[i] = psi[i] * spin.m(i);
        if i > 0 {
            let a = spin.raise_coefficient(i);
            up[i - 1] = psi[i] * a;
            down[i] = psi[i - 1] * a;
        }
    }
    let x: Vec<_> = up.iter().zip(&down).map(|(u, d)| (u + d) * 0.5).collect();
    let y: Vec<_> = up
        .iter()
        .zip(&down)
        .map(|(u, d)| (u - d) * Complex64::new(0.0, -0.5))
        .collect();
    [x, y, z]
}

/// Moments of a collective-spin state.
pub fn collective_moments(spin: SpinQuantum, psi: &StateVector) -> Result<CollectiveMoments> {
    if psi.dim() != spin.dim() {
        return Err(DdError::DimensionMismatch {
            expected: spin.dim(),
            actual: psi.dim(),
        });
    }
    let amps = psi.amplitudes();
    let comps = apply_components(spin, amps);
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for a in 0..3 {
        mean[a] = linalg::vdot(amps, &comps[a]).re;
        for b in a..3 {
            let v = linalg::vdot(&comps[a], &comps[b]).re;
            second[a][b] = v;
            second[b][a] = v;
        }
    }
    Ok(CollectiveMoments {
        j: spin.value(),
        mean,
        second,
    })
}

/// Minimal variance in the plane transverse to the mean spin, as `2ΔJ²_min/J`.
pub fn transverse_squeezing(m: &CollectiveMoments) -> f64 {
    let norm = (m.mean.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let n = if norm > 1e-12 {
        [m.mean[0] / norm, m.mean[1] / norm, m.mean[2] / norm]
    } else {
        [0.0, 0.0, 1.0]
    };
    // orthonormal pair spanning the transverse plane
    let seed = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let dot = seed[0] * n[0] + seed[1] * n[1] + seed[2] * n[2];
    let mut u = [seed[0] - dot * n[0], seed[1] - dot * n[1], seed[2] - dot * n[2]];
    let un = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    u = [u[0] / un, u[1] / un, u[2] / un];
    let v = [
        n[1] * u[2] - n[2] * u[1],
        n[2] * u[0] - n[0] * u[2],
        n[0] * u[1] - n[1] * u[0],
    ];
    let cov = |p: &[f64; 3], q: &[f64; 3]| {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += p[a] * q[b] * m.covariance(a, b);
            }
        }
        s
    };
    let (vu, vv, cuv) = (cov(&u, &u), cov(&v, &v), cov(&u, &v));
    let lo = 0.5 * (vu + vv) - (0.25 * (vu - vv).powi(2) + cuv * cuv).sqrt();
    2.0 * lo / m.j
}

/// Generator used to prepare a squeezed spin state from the x-pole CSS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwistKind {
    /// `exp(−iθ Jz²)`, followed by a rotation about x aligning the squeezed axis with z.
    OneAxis,
    /// `exp(−iθ (JyJz + JzJy))`; squeezes z and anti-squeezes y directly.
    #[default]
    TwoAxis,
}

/// A prepared SSS with its preparation record.
///
/// Orientation: mean spin along +x, squeezed quadrature along z,
/// anti-squeezed quadrature along y.
#[derive(Clone, Debug)]
pub struct SqueezedState {
    pub state: StateVector,
    pub theta: f64,
    /// Rotation about x applied after twisting (zero for two-axis twisting).
    pub alignment: f64,
    pub xi2: f64,
    pub kind: TwistKind,
}

struct Twister {
    spin: SpinQuantum,
    kind: TwistKind,
    css: Vec<Complex64>,
    // two-axis: eigenbasis of Jx Jz + Jz Jx and the diagonal frame change
    eig: Option<HermitianEigen>,
    coeffs: Vec<Complex64>,
}

impl Twister {
    fn new(spin: SpinQuantum, kind: TwistKind) -> Result<Self> {
        let css = coherent_spin_state(spin.value(), [1.0, 0.0, 0.0])?.into_amplitudes();
        let mut eig = None;
        let mut coeffs = Vec::new();
        if kind == TwistKind::TwoAxis {
            // JyJz + JzJy = D (JxJz + JzJx) D†, D = exp(−iπ/2 Jz) diagonal
            let n = spin.dim();
            let mut k = DMatrix::<f64>::zeros(n, n);
            for i in 1..n {
                let a = 0.5 * spin.raise_coefficient(i);
                let v = a * (spin.m(i) + spin.m(i - 1));
                k[(i - 1, i)] = v;
                k[(i, i - 1)] = v;
            }
            let e = HermitianEigen::new_real(&k);
            let rotated: Vec<_> = css
                .iter()
                .enumerate()
                .map(|(i, a)| a * frame_phase(spin, i).conj())
                .collect();
            coeffs = (0..n)
                .map(|j| (0..n).map(|i| e.vectors[(i, j)].conj() * rotated[i]).sum())
                .collect();
            eig = Some(e);
        }
        Ok(Self {
            spin,
            kind,
            css,
            eig,
            coeffs,
        })
    }

    fn state(&self, theta: f64) -> Vec<Complex64> {
        match self.kind {
            TwistKind::OneAxis => self
                .css
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let m = self.spin.m(i);
                    a * Complex64::from_polar(1.0, -theta * m * m)
                })
                .collect(),
            TwistKind::TwoAxis => {
                let e = self.eig.as_ref().expect("two-axis eigenbasis");
                let n = self.spin.dim();
                let c: Vec<_> = (0..n)
                    .map(|j| self.coeffs[j] * Complex64::from_polar(1.0, -theta * e.values[j]))
                    .collect();
                (0..n)
                    .map(|i| {
                        let s: Complex64 = (0..n).map(|j| e.vectors[(i, j)] * c[j]).sum();
                        s * frame_phase(self.spin, i)
                    })
                    .collect()
            }
        }
    }

    fn xi2(&self, theta: f64) -> f64 {
        let psi = StateVector::from_raw(self.state(theta));
        transverse_squeezing(&collective_moments(self.spin, &psi).expect("dimension"))
    }
}

/// `⟨m|exp(−iπ/2 Jz)|m⟩`
fn frame_phase(spin: SpinQuantum, i: usize) -> Complex64 {
    Complex64::from_polar(1.0, -0.5 * std::f64::consts::PI * spin.m(i))
}

/// Target-matching tolerance (relative) for the achieved squeezing.
pub const SQUEEZING_REL_TOL: f64 = 0.01;

/// Twists the x-pole CSS until the transverse squeezing reaches `target_xi2`.
///
/// The twisting strength is bracketed on a logarithmic scan up to the first
/// minimum of ξ²(θ), then solved by bisection on the decreasing branch.
pub fn squeezed_spin_state(j: f64, target_xi2: f64, kind: TwistKind) -> Result<SqueezedState> {
    let spin = SpinQuantum::new(j)?;
    if !(target_xi2 > 0.0 && target_xi2 <= 1.0) {
        return Err(DdError::InvalidParameter(format!(
            "squeezing target {target_xi2} outside (0, 1]"
        )));
    }
    if target_xi2 >= 1.0 - 1e-12 {
        let css = coherent_spin_state(j, [1.0, 0.0, 0.0])?;
        return Ok(SqueezedState {
            state: css,
            theta: 0.0,
            alignment: 0.0,
            xi2: 1.0,
            kind,
        });
    }
    let tw = Twister::new(spin, kind)?;
    let (theta_min, xi2_min) = first_minimum(&tw);
    let theta = if target_xi2 < xi2_min {
        if xi2_min <= target_xi2 * (1.0 + SQUEEZING_REL_TOL) {
            theta_min
        } else {
            return Err(DdError::SqueezingUnreachable {
                target: target_xi2,
                minimum: xi2_min,
            });
        }
    } else {
        let (mut lo, mut hi) = (0.0, theta_min);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if tw.xi2(mid) > target_xi2 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * theta_min.max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let mut amps = tw.state(theta);
    let mut alignment = 0.0;
    if kind == TwistKind::OneAxis {
        let psi = StateVector::from_raw(amps.clone());
        let m = collective_moments(spin, &psi)?;
        alignment = alignment_angle(&m);
        let spin_ops = collective_spin_operators(j)?;
        let u = rotation_operator(&Rotation::x(alignment), &spin_ops);
        amps = u.apply(&amps);
    }
    let state = StateVector::normalized(amps)?;
    let xi2 = transverse_squeezing(&collective_moments(spin, &state)?);
    Ok(SqueezedState {
        state,
        theta,
        alignment,
        xi2,
        kind,
    })
}

/// Angle α such that a rotation about x by α puts the minor axis of the
/// (y, z) covariance onto z.
fn alignment_angle(m: &CollectiveMoments) -> f64 {
    let (vy, vz, c) = (m.variance(1), m.variance(2), m.covariance(1, 2));
    // major axis sits at angle phi from y; the minor axis at phi + π/2
    let phi = 0.5 * (2.0 * c).atan2(vy - vz);
    -phi
}

fn first_minimum(tw: &Twister) -> (f64, f64) {
    let steps = 160;
    let (lo, hi) = (1e-7_f64.ln(), 2.0_f64.ln());
    let grid: Vec<f64> = (0..=steps)
        .map(|k| (lo + (hi - lo) * k as f64 / steps as f64).exp())
        .collect();
    let mut prev = tw.xi2(grid[0]);
    let mut idx = grid.len() - 1;
    for k in 1..grid.len() {
        let v = tw.xi2(grid[k]);
        if v > prev {
            idx = k - 1;
            break;
        }
        prev = v;
    }
    let (mut a, mut b) = (grid[idx.saturating_sub(1)], grid[(idx + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (tw.xi2(x1), tw.xi2(x2));
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = tw.xi2(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = tw.xi2(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Rotation taking +x to each benchmark direction (x, y, z, −z).
pub fn benchmark_rotations() -> [(&'static str, Rotation); 4] {
    use std::f64::consts::FRAC_PI_2;
    [
        ("x", Rotation::z(0.0)),
        ("y", Rotation::z(FRAC_PI_2)),
        ("z", Rotation::y(-FRAC_PI_2)),
        ("-z", Rotation::y(FRAC_PI_2)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs};
    use std::f64::consts::PI;

    fn dense(op: &Operator) -> CMatrix {
        op.to_dense()
    }

    #[test]
    fn spin_half_matrices_match_pauli_over_two() {
        let s = collective_spin_operators(0.5).unwrap();
        let [sx, sy, sz] = spin_half_matrices();
        assert!(max_abs(&(dense(&s.jx) - sx)) < 1e-15);
        assert!(max_abs(&(dense(&s.jy) - sy)) < 1e-15);
        assert!(max_abs(&(dense(&s.jz) - sz)) < 1e-15);
    }

    #[test]
    fn spin_one_jz() {
        let s = collective_spin_operators(1.0).unwrap();
        let jz = dense(&s.jz);
        for (i, m) in [1.0, 0.0, -1.0].iter().enumerate() {
            assert_eq!(jz[(i, i)], c64(*m));
        }
    }

    #[test]
    fn commutator_spin_five() {
        let s = collective_spin_operators(5.0).unwrap();
        let (x, y, z) = (dense(&s.jx), dense(&s.jy), dense(&s.jz));
        assert!(max_abs(&(commutator(&x, &y) - z * I)) <= 1e-12);
    }

    #[test]
    fn casimir_is_sum_of_squares() {
        for j in [0.5, 1.0, 2.5, 7.0] {
            let s = collective_spin_operators(j).unwrap();
            let (x, y, z) = (dense(&s.jx), dense(&s.jy), dense(&s.jz));
            let sum = &x * &x + &y * &y + &z * &z;
            assert!(max_abs(&(sum - dense(&s.jsq))) < 1e-11, "J={j}");
        }
    }

    #[test]
    fn rejects_bad_spin() {
        assert!(collective_spin_operators(0.3).is_err());
        assert!(collective_spin_operators(0.0).is_err());
        assert!(collective_spin_operators(-1.0).is_err());
    }

    #[test]
    fn embedding_site_zero_is_most_significant() {
        let [_, _, sz] = spin_half_matrices();
        let op = single_site_operator(1, 0, &sz).unwrap().to_dense();
        let diag: Vec<f64> = (0..4).map(|i| op[(i, i)].re).collect();
        assert_eq!(diag, vec![0.5, 0.5, -0.5, -0.5]);
        assert!(single_site_operator(1, 2, &sz).is_err());
    }

    #[test]
    fn disjoint_sites_commute() {
        let [sx, sy, _] = spin_half_matrices();
        let a = single_site_operator(2, 1, &sx).unwrap().to_dense();
        let b = single_site_operator(2, 2, &sy).unwrap().to_dense();
        assert_eq!(max_abs(&commutator(&a, &b)), 0.0);
    }

    #[test]
    fn y_pulse_spin_half() {
        let s = collective_spin_operators(0.5).unwrap();
        let u = rotation_operator(&Rotation::y(PI), &s).to_dense();
        let expect = CMatrix::from_row_slice(2, 2, &[c64(0.0), c64(-1.0), c64(1.0), c64(0.0)]);
        assert!(max_abs(&(u - expect)) < 1e-15);
    }

    #[test]
    fn inverse_imperfect_pulses() {
        let s = collective_spin_operators(0.5).unwrap();
        let eps = 0.03;
        let angle = (1.0 - eps) * PI;
        let a = rotation_operator(&Rotation::new([0.0, 1.0, 0.0], angle).unwrap(), &s).to_dense();
        let b = rotation_operator(&Rotation::new([0.0, -1.0, 0.0], angle).unwrap(), &s).to_dense();
        assert!(max_abs(&(a * b - CMatrix::identity(2, 2))) <= 1e-12);
    }

    #[test]
    fn zero_angle_is_identity() {
        let s = collective_spin_operators(3.0).unwrap();
        let u = rotation_operator(&Rotation::new([1.0, 2.0, 3.0], 0.0).unwrap(), &s).to_dense();
        assert!(max_abs(&(u - CMatrix::identity(7, 7))) < 1e-12);
    }

    #[test]
    fn so3_matches_heisenberg_rotation() {
        let s = collective_spin_operators(2.0).unwrap();
        let rot = Rotation::new([0.3, -0.5, 0.8], 1.1).unwrap();
        let u = rotation_operator(&rot, &s).to_dense();
        let r = rot.so3();
        let comps = [dense(&s.jx), dense(&s.jy), dense(&s.jz)];
        for a in 0..3 {
            let lhs = u.adjoint() * &comps[a] * &u;
            let rhs = &comps[0] * c64(r[a][0]) + &comps[1] * c64(r[a][1]) + &comps[2] * c64(r[a][2]);
            assert!(max_abs(&(lhs - rhs)) < 1e-11);
        }
    }

    #[test]
    fn css_along_z_and_x() {
        let up = coherent_spin_state(3.0, [0.0, 0.0, 1.0]).unwrap();
        assert!((up.amplitudes()[0].norm() - 1.0).abs() < 1e-14);
        let x = coherent_spin_state(0.5, [1.0, 0.0, 0.0]).unwrap();
        let r = 0.5f64.sqrt();
        assert!((x.amplitudes()[0] - c64(r)).norm() < 1e-14);
        assert!((x.amplitudes()[1] - c64(r)).norm() < 1e-14);
    }

    #[test]
    fn css_matches_rotated_highest_weight() {
        let s = collective_spin_operators(4.0).unwrap();
        let dir = [0.2, -0.7, 0.4];
        let css = coherent_spin_state(4.0, dir).unwrap();
        let n = (0.04f64 + 0.49 + 0.16).sqrt();
        let d = [dir[0] / n, dir[1] / n, dir[2] / n];
        let theta = d[2].acos();
        let phi = d[1].atan2(d[0]);
        let u = rotation_operator(&Rotation::z(phi), &s).to_dense()
            * rotation_operator(&Rotation::y(theta), &s).to_dense();
        let other = StateVector::basis(9, 0).evolve_by(&u);
        assert!((css.overlap_sq(&other) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_target_returns_css() {
        let s = squeezed_spin_state(10.0, 1.0, TwistKind::TwoAxis).unwrap();
        assert_eq!(s.theta, 0.0);
        let css = coherent_spin_state(10.0, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.state, css);
    }

    #[test]
    fn squeezing_target_hit_within_one_percent() {
        for kind in [TwistKind::OneAxis, TwistKind::TwoAxis] {
            let s = squeezed_spin_state(20.0, 0.2, kind).unwrap();
            assert!((s.xi2 - 0.2).abs() <= 0.002, "{kind:?}: {}", s.xi2);
            let m = collective_moments(SpinQuantum::new(20.0).unwrap(), &s.state).unwrap();
            // mean along +x, squeezed along z
            assert!(m.mean[0] > 0.0 && m.mean[1].abs() < 1e-9 && m.mean[2].abs() < 1e-9);
            assert!((2.0 * m.variance(2) / 20.0 - s.xi2).abs() < 1e-9);
        }
    }

    #[test]
    fn unreachable_target_names_minimum() {
        match squeezed_spin_state(5.0, 1e-4, TwistKind::OneAxis) {
            Err(DdError::SqueezingUnreachable { minimum, .. }) => assert!(minimum > 1e-4),
            other => panic!("expected unreachable error, got {other:?}"),
        }
    }

    #[test]
    fn one_axis_minimum_is_single_on_scan() {
        // dense θ scan at J = 20: ξ²(θ) decreases to one minimum and then blows up
        let spin = SpinQuantum::new(20.0).unwrap();
        let tw = Twister::new(spin, TwistKind::OneAxis).unwrap();
        let (theta_min, _) = first_minimum(&tw);
        let scan: Vec<f64> = (1..400).map(|k| k as f64 * 4.0 * theta_min / 400.0).collect();
        let vals: Vec<f64> = scan.iter().map(|&t| tw.xi2(t)).collect();
        let argmin = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((scan[argmin] - theta_min).abs() < 2.0 * 4.0 * theta_min / 400.0);
        assert!(vals[..argmin].windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(vals[argmin..].windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let s = squeezed_spin_state(20.0, 0.3, TwistKind::OneAxis).unwrap();
        assert!(s.theta < theta_min);
    }
}

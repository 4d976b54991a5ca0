//! Model Hamiltonians: collective spin in stray fields, and a central spin-1/2
//! coupled to a spin-1/2 bath (quantum dot hyperfine or NV dipolar form).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::linalg::c64;
use crate::noise::{stream_rng, DOMAIN_COUPLINGS, DOMAIN_DIPOLAR};
use crate::operator::Operator;
use crate::sparse::CsrMatrix;
use crate::spin::{collective_spin_operators, SpinQuantum};

/// Default cap on bath sites; `2^(N+1)` amplitudes must fit in memory.
pub const DEFAULT_MAX_BATH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BecModel {
    pub j: f64,
    pub c2p: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl BecModel {
    pub fn new(j: f64, c2p: f64, omega: f64) -> Result<Self> {
        SpinQuantum::new(j)?;
        Ok(Self {
            j,
            c2p,
            omega,
            gamma: 1.0,
        })
    }

    pub fn spin(&self) -> SpinQuantum {
        SpinQuantum::new(self.j).expect("validated at construction")
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }

    /// `Ω` such that `H = c2′ J(J+1) + Ω·J` inside the maximal multiplet.
    pub fn precession_vector(&self, b: [f64; 3], bias_sign: f64) -> [f64; 3] {
        [
            self.gamma * b[0],
            self.gamma * b[1],
            self.gamma * b[2] + bias_sign * self.omega,
        ]
    }
}

/// `c2′ J² + ω Jz + γ b·J`, dense.
pub fn bec_hamiltonian(model: &BecModel, b: [f64; 3]) -> Result<Operator> {
    bec_hamiltonian_signed(model, b, 1.0)
}

/// As [`bec_hamiltonian`] with the bias multiplied by `bias_sign`.
pub fn bec_hamiltonian_signed(model: &BecModel, b: [f64; 3], bias_sign: f64) -> Result<Operator> {
    if b.iter().any(|v| !v.is_finite()) {
        return Err(DdError::InvalidParameter(format!("stray field {b:?}")));
    }
    let ops = collective_spin_operators(model.j)?;
    let w = model.precession_vector(b, bias_sign);
    let h = ops.jsq.to_dense() * c64(model.c2p) + ops.along(w);
    Ok(Operator::from_dense(h))
}

/// Nuclear lattice geometry for the Gaussian hyperfine profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperfineGrid {
    pub nx: usize,
    pub ny: usize,
    pub wx: f64,
    pub wy: f64,
    pub x0: f64,
    pub y0: f64,
    pub scale: f64,
    /// Explicit site coordinates in row-major order; overrides the centered lattice.
    #[serde(default)]
    pub coords: Option<Vec<[f64; 2]>>,
}

impl Default for HyperfineGrid {
    fn default() -> Self {
        Self {
            nx: 4,
            ny: 3,
            wx: 1.5,
            wy: 2.0,
            x0: 0.1,
            y0: 0.2,
            scale: 1.0,
            coords: None,
        }
    }
}

impl HyperfineGrid {
    pub fn with_dims(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            ..Self::default()
        }
    }

    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }

    /// Site coordinates: unit lattice centered on the grid midpoint, row-major (x fastest).
    pub fn coordinates(&self) -> Vec<[f64; 2]> {
        if let Some(c) = &self.coords {
            return c.clone();
        }
        let cx = (self.nx as f64 + 1.0) / 2.0;
        let cy = (self.ny as f64 + 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.sites());
        for iy in 1..=self.ny {
            for ix in 1..=self.nx {
                out.push([ix as f64 - cx, iy as f64 - cy]);
            }
        }
        out
    }

    /// 4-neighborhood pairs `(i, j)` with `i < j`.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let k = iy * self.nx + ix;
                if ix + 1 < self.nx {
                    pairs.push((k, k + 1));
                }
                if iy + 1 < self.ny {
                    pairs.push((k, k + self.nx));
                }
            }
        }
        pairs
    }
}

/// `A_k = scale · exp[−(x−x0)²/wx² − (y−y0)²/wy²]` on the grid sites.
pub fn hyperfine_couplings(grid: &HyperfineGrid) -> Result<Vec<f64>> {
    if !(grid.wx > 0.0 && grid.wy > 0.0) {
        return Err(DdError::InvalidParameter("Gaussian widths must be positive".into()));
    }
    let coords = grid.coordinates();
    if coords.len() != grid.sites() {
        return Err(DdError::DimensionMismatch {
            expected: grid.sites(),
            actual: coords.len(),
        });
    }
    Ok(coords
        .iter()
        .map(|[x, y]| {
            let ex = (x - grid.x0).powi(2) / (grid.wx * grid.wx);
            let ey = (y - grid.y0).powi(2) / (grid.wy * grid.wy);
            grid.scale * (-ex - ey).exp()
        })
        .collect())
}

/// Secular dipolar bond `Γ (I_i·I_j − 3 I_iz I_jz)` between nuclei `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipolarBond {
    pub i: usize,
    pub j: usize,
    pub gamma: f64,
}

/// `Γ_ij ~ U[0, gamma_max]` on every nearest-neighbor pair of the grid.
pub fn sample_dipolar(grid: &HyperfineGrid, gamma_max: f64, seed: u64) -> Vec<DipolarBond> {
    let mut rng = stream_rng(seed, DOMAIN_DIPOLAR, 0);
    grid.neighbor_pairs()
        .into_iter()
        .map(|(i, j)| DipolarBond {
            i,
            j,
            gamma: if gamma_max > 0.0 {
                rng.random_range(0.0..=gamma_max)
            } else {
                0.0
            },
        })
        .collect()
}

/// Two-site interaction `jxy (SxSx + SySy) + jz SzSz` or a Zeeman term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Term {
    Zeeman { site: usize, coeff: f64 },
    Exchange { a: usize, b: usize, jxy: f64, jz: f64 },
}

/// A central spin (site 0) plus `n_bath` spin-1/2 sites, with a bias `ω S_z`
/// on the central spin kept separate so its sign can be flipped per delay.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralSpinSystem {
    pub n_bath: usize,
    pub terms: Vec<Term>,
    pub omega: f64,
}

impl CentralSpinSystem {
    pub fn dim(&self) -> usize {
        1 << (self.n_bath + 1)
    }

    /// Full Hamiltonian with bias coefficient `bias_sign · ω`.
    pub fn hamiltonian(&self, bias_sign: f64) -> CsrMatrix {
        let mut terms = self.terms.clone();
        if self.omega != 0.0 {
            terms.push(Term::Zeeman {
                site: 0,
                coeff: bias_sign * self.omega,
            });
        }
        assemble(self.n_bath + 1, &terms)
    }

    pub fn without_bias(&self) -> Self {
        Self {
            omega: 0.0,
            ..self.clone()
        }
    }
}

fn bit(state: usize, sites: usize, site: usize) -> usize {
    (state >> (sites - 1 - site)) & 1
}

/// Sparse assembly in the computational basis (bit 0 = up, site 0 most significant).
pub(crate) fn assemble(sites: usize, terms: &[Term]) -> CsrMatrix {
    let dim = 1usize << sites;
    let mut t = Vec::new();
    for s in 0..dim {
        let mut diag = 0.0;
        for term in terms {
            match *term {
                Term::Zeeman { site, coeff } => {
                    diag += coeff * (0.5 - bit(s, sites, site) as f64);
                }
                Term::Exchange { a, b, jxy, jz } => {
                    let (ba, bb) = (bit(s, sites, a), bit(s, sites, b));
                    let za = 0.5 - ba as f64;
                    let zb = 0.5 - bb as f64;
                    diag += jz * za * zb;
                    if ba != bb && jxy != 0.0 {
                        let flipped = s ^ (1 << (sites - 1 - a)) ^ (1 << (sites - 1 - b));
                        t.push((flipped, s, c64(0.5 * jxy)));
                    }
                }
            }
        }
        if diag != 0.0 {
            t.push((s, s, c64(diag)));
        }
    }
    CsrMatrix::from_triplets(dim, t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QdModel {
    pub couplings: Vec<f64>,
    pub dipolar: Vec<DipolarBond>,
    pub omega: f64,
    #[serde(default = "default_max_bath")]
    pub max_sites: usize,
}

fn default_max_bath() -> usize {
    DEFAULT_MAX_BATH
}

impl QdModel {
    pub fn new(couplings: Vec<f64>, dipolar: Vec<DipolarBond>, omega: f64) -> Result<Self> {
        let m = Self {
            couplings,
            dipolar,
            omega,
            max_sites: DEFAULT_MAX_BATH,
        };
        m.validate()?;
        Ok(m)
    }

    /// Gaussian couplings on `grid` and random nearest-neighbor dipolar bonds.
    pub fn from_grid(grid: &HyperfineGrid, gamma_max: f64, omega: f64, seed: u64) -> Result<Self> {
        Self::new(
            hyperfine_couplings(grid)?,
            sample_dipolar(grid, gamma_max, seed),
            omega,
        )
    }

    pub fn n(&self) -> usize {
        self.couplings.len()
    }

    pub fn dim(&self) -> usize {
        1 << (self.n() + 1)
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self {
            omega,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.couplings.is_empty() {
            return Err(DdError::Empty("hyperfine couplings"));
        }
        check_sites(self.n(), self.max_sites)?;
        if let Some(a) = self.couplings.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(DdError::InvalidParameter(format!("hyperfine coupling {a}")));
        }
        for b in &self.dipolar {
            if b.i >= b.j || b.j >= self.n() || !b.gamma.is_finite() {
                return Err(DdError::InvalidParameter(format!("dipolar bond {b:?}")));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<CentralSpinSystem> {
        self.validate()?;
        let mut terms = Vec::with_capacity(self.n() + self.dipolar.len());
        for (k, &a) in self.couplings.iter().enumerate() {
            terms.push(Term::Exchange {
                a: 0,
                b: k + 1,
                jxy: a,
                jz: a,
            });
        }
        for d in &self.dipolar {
            terms.push(Term::Exchange {
                a: d.i + 1,
                b: d.j + 1,
                jxy: d.gamma,
                jz: -2.0 * d.gamma,
            });
        }
        Ok(CentralSpinSystem {
            n_bath: self.n(),
            terms,
            omega: self.omega,
        })
    }
}

fn check_sites(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(DdError::TooLarge {
            what: "bath sites",
            dim: n,
            limit: max,
        });
    }
    Ok(())
}

/// `S·h + Σ Γ_ij(I_i·I_j − 3 I_iz I_jz)`, plus `ω S_z` when `include_bias`.
pub fn qd_hamiltonian(model: &QdModel, include_bias: bool) -> Result<Operator> {
    let sys = model.system()?;
    let sign = if include_bias { 1.0 } else { 0.0 };
    Ok(Operator::from_sparse(sys.hamiltonian(sign)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvModel {
    pub couplings: Vec<f64>,
    pub omega: f64,
    #[serde(default = "default_max_bath")]
    pub max_sites: usize,
}

impl NvModel {
    pub fn new(couplings: Vec<f64>, omega: f64) -> Result<Self> {
        let m = Self {
            couplings,
            omega,
            max_sites: DEFAULT_MAX_BATH,
        };
        m.validate()?;
        Ok(m)
    }

    /// `A_k ~ U[0, 1]`.
    pub fn random(n: usize, omega: f64, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, DOMAIN_COUPLINGS, 0);
        Self::new((0..n).map(|_| rng.random_range(0.0..1.0)).collect(), omega)
    }

    pub fn n(&self) -> usize {
        self.couplings.len()
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self {
            omega,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.couplings.is_empty() {
            return Err(DdError::Empty("dipolar couplings"));
        }
        check_sites(self.n(), self.max_sites)?;
        if self.couplings.iter().any(|a| !a.is_finite()) {
            return Err(DdError::InvalidParameter("non-finite coupling".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<CentralSpinSystem> {
        self.validate()?;
        let terms = self
            .couplings
            .iter()
            .enumerate()
            .map(|(k, &a)| Term::Exchange {
                a: 0,
                b: k + 1,
                jxy: a,
                jz: -2.0 * a,
            })
            .collect();
        Ok(CentralSpinSystem {
            n_bath: self.n(),
            terms,
            omega: self.omega,
        })
    }
}

/// `Σ A_k (S₀·S_k − 3 S₀z S_kz)` without the bias.
pub fn nv_hamiltonian(model: &NvModel) -> Result<Operator> {
    Ok(Operator::from_sparse(model.system()?.hamiltonian(0.0)))
}

/// `S_z^{site 0} + Σ_k I_kz`, used by conservation checks.
pub fn total_sz(n_bath: usize) -> CsrMatrix {
    let terms: Vec<Term> = (0..=n_bath)
        .map(|site| Term::Zeeman { site, coeff: 1.0 })
        .collect();
    assemble(n_bath + 1, &terms)
}

#[cfg(test)]
fn dense_eigenvalues(m: &crate::linalg::CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = crate::linalg::HermitianEigen::new(m).values.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

use num_complex::Complex64;

use super::{
    ChebyshevPropagator, Engine, ExactPropagator, Observation, PropagatorConfig, Trajectory,
    TrajectoryMeta,
};
use crate::error::{DdError, Result};
use crate::linalg;
use crate::models::CentralSpinSystem;
use crate::observables::reduced_electron;
use crate::operator::{Operator, StateVector};
use crate::sequences::{Sequence, SequenceEvent};

enum Kernel {
    Exact(ExactPropagator),
    Chebyshev(ChebyshevPropagator),
}

impl Kernel {
    fn evolve(&mut self, psi: &mut [Complex64], t: f64) -> Result<()> {
        match self {
            Self::Exact(p) => p.evolve(psi, t),
            Self::Chebyshev(p) => p.evolve(psi, t),
        }
    }
}

/// Runs sequences on a central spin plus quantum bath. Propagators are built
/// lazily per bias sign and reused across runs.
pub struct CentralSpinRunner {
    system: CentralSpinSystem,
    cfg: PropagatorConfig,
    // index 0: bias +ω, index 1: bias −ω
    kernels: [Option<Kernel>; 2],
}

impl CentralSpinRunner {
    pub fn new(system: &CentralSpinSystem, cfg: &PropagatorConfig) -> Result<Self> {
        cfg.cheb.validate()?;
        Ok(Self {
            system: system.clone(),
            cfg: *cfg,
            kernels: [None, None],
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    fn kernel(&mut self, bias_sign: i8) -> Result<&mut Kernel> {
        let slot = if bias_sign >= 0 { 0 } else { 1 };
        if self.kernels[slot].is_none() {
            let h = self.system.hamiltonian(bias_sign as f64);
            let k = match self.cfg.engine {
                Engine::Exact => Kernel::Exact(ExactPropagator::new(&Operator::from_sparse(h))?),
                Engine::Chebyshev => Kernel::Chebyshev(ChebyshevPropagator::new(h, self.cfg.cheb)?),
            };
            self.kernels[slot] = Some(k);
        }
        Ok(self.kernels[slot].as_mut().expect("just built"))
    }

    /// Applies the events of `seq` to `psi`, calling `hook(t, ψ)` at `t = 0`
    /// and after each cycle.
    pub fn drive(
        &mut self,
        seq: &Sequence,
        psi: &mut [Complex64],
        hook: &mut dyn FnMut(f64, &[Complex64]),
    ) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(DdError::DimensionMismatch {
                expected: self.dim(),
                actual: psi.len(),
            });
        }
        let norm0 = linalg::norm(psi);
        let mut t = 0.0;
        let mut steps = 0usize;
        hook(t, psi);
        for cycle in seq.events.chunks(seq.cycle_len()) {
            for e in cycle {
                match *e {
                    SequenceEvent::Delay {
                        duration,
                        bias_sign,
                    } => {
                        self.kernel(bias_sign)?.evolve(psi, duration)?;
                        t += duration;
                        steps += 1;
                    }
                    SequenceEvent::Pulse(r) => apply_central(psi, &r.su2()),
                }
            }
            hook(t, psi);
        }
        // each call is held to the per-call limit; rounding adds up over a sequence
        let drift = (linalg::norm(psi) - norm0).abs();
        if drift > super::chebyshev::NORM_DRIFT_LIMIT * steps.max(1) as f64 {
            return Err(DdError::NormDrift { drift });
        }
        Ok(())
    }

    /// Records the reduced electron state at every cycle boundary.
    pub fn run(&mut self, seq: &Sequence, psi0: &StateVector, realization: usize) -> Result<Trajectory> {
        let mut psi = psi0.amplitudes().to_vec();
        let n_bath = self.system.n_bath;
        let mut times = Vec::with_capacity(seq.cycles() + 1);
        let mut observations = Vec::with_capacity(seq.cycles() + 1);
        self.drive(seq, &mut psi, &mut |t, amps| {
            times.push(t);
            observations.push(Observation::Electron(reduced_electron(amps, n_bath)));
        })?;
        Ok(Trajectory {
            times,
            observations,
            meta: TrajectoryMeta {
                label: seq.label.clone(),
                realization,
            },
        })
    }

    /// Final state only.
    pub fn final_state(&mut self, seq: &Sequence, psi0: &StateVector) -> Result<StateVector> {
        let mut psi = psi0.amplitudes().to_vec();
        self.drive(seq, &mut psi, &mut |_, _| {})?;
        Ok(StateVector::from_raw(psi))
    }
}

/// Applies a 2×2 unitary to the most significant (central) qubit.
pub(crate) fn apply_central(psi: &mut [Complex64], u: &[[Complex64; 2]; 2]) {
    let half = psi.len() / 2;
    let (up, down) = psi.split_at_mut(half);
    for (a, b) in up.iter_mut().zip(down.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = u[0][0] * x + u[0][1] * y;
        *b = u[1][0] * x + u[1][1] * y;
    }
}

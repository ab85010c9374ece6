//! Fixed-step integrators over flat amplitude vectors.
//!
//! Every integrator works on `dy/dx = rhs(x, y)`. Right-hand sides write into
//! a caller-provided buffer and may fail, which is how constraint solvers
//! (the fermionic chemical potential) report breakdown.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{NoeError, Result};

use crate::scalar::{Real, Scalar};

/// A named contiguous slice of the flat state vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: &'static str,
    pub offset: usize,
    pub len: usize,
}

/// Ordered block descriptors shared by all states of one flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    blocks: Vec<Block>,
    len: usize,
}

impl Layout {
    pub fn new(spec: &[(&'static str, usize)]) -> Arc<Self> {
        let mut offset = 0;
        let blocks = spec
            .iter()
            .map(|&(name, len)| {
                let b = Block { name, offset, len };
                offset += len;
                b
            })
            .collect();
        Arc::new(Self { blocks, len: offset })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Name of the block containing flat index `i`.
    pub fn block_of(&self, i: usize) -> &'static str {
        self.blocks
            .iter()
            .find(|b| i >= b.offset && i < b.offset + b.len)
            .map_or("?", |b| b.name)
    }
}

/// Independent variable plus flattened amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<S: Scalar> {
    pub x: S::Real,
    pub y: Vec<S>,
    pub layout: Arc<Layout>,
}

impl<S: Scalar> FlowState<S> {
    pub fn new(x: S::Real, y: Vec<S>, layout: Arc<Layout>) -> Result<Self> {
        if y.len() != layout.len() {
            return Err(NoeError::DimensionMismatch {
                context: "flow state vs layout",
                expected: layout.len(),
                found: y.len(),
            });
        }
        Ok(Self { x, y, layout })
    }

    pub fn block(&self, name: &str) -> &[S] {
        let b = self.layout.block(name).expect("unknown block");
        &self.y[b.offset..b.offset + b.len]
    }

    pub fn block_mut(&mut self, name: &str) -> &mut [S] {
        let b = self.layout.block(name).expect("unknown block").clone();
        &mut self.y[b.offset..b.offset + b.len]
    }

    /// Fails with `StepUnstable` naming the first block holding a non-finite value.
    pub fn check_finite(&self) -> Result<()> {
        match self.y.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(NoeError::StepUnstable {
                at: self.x.to_f64_lossy(),
                block: self.layout.block_of(i).to_string(),
                detail: "non-finite amplitude".into(),
            }),
        }
    }

    fn with(&self, x: S::Real, y: Vec<S>) -> Self {
        Self {
            x,
            y,
            layout: Arc::clone(&self.layout),
        }
    }
}

fn axpy<S: Scalar>(y: &[S], a: S::Real, k: &[S]) -> Vec<S> {
    y.iter().zip(k).map(|(&yi, &ki)| yi + ki * a).collect()
}

fn eval<S: Scalar, F>(rhs: &mut F, x: S::Real, y: &[S]) -> Result<Vec<S>>
where
    F: FnMut(S::Real, &[S], &mut [S]) -> Result<()>,
{
    let mut out = vec![S::zero(); y.len()];
    rhs(x, y, &mut out)?;
    Ok(out)
}

/// Classical four-stage Runge-Kutta step.
pub fn step_rk4<S: Scalar, F>(state: &FlowState<S>, dx: S::Real, rhs: &mut F) -> Result<FlowState<S>>
where
    F: FnMut(S::Real, &[S], &mut [S]) -> Result<()>,
{
    let half = S::Real::lit(0.5);
    let (x, y) = (state.x, &state.y);
    let k1 = eval(rhs, x, y)?;
    let k2 = eval(rhs, x + half * dx, &axpy(y, half * dx, &k1))?;
    let k3 = eval(rhs, x + half * dx, &axpy(y, half * dx, &k2))?;
    let k4 = eval(rhs, x + dx, &axpy(y, dx, &k3))?;
    let sixth = dx / S::Real::lit(6.0);
    let two = S::Real::lit(2.0);
    let next: Vec<S> = (0..y.len())
        .map(|i| y[i] + (k1[i] + k2[i] * two + k3[i] * two + k4[i]) * sixth)
        .collect();
    let out = state.with(x + dx, next);
    out.check_finite()?;
    Ok(out)
}

/// Forward Euler step, used to seed the two-level schemes.
pub fn step_euler<S: Scalar, F>(state: &FlowState<S>, dx: S::Real, rhs: &mut F) -> Result<FlowState<S>>
where
    F: FnMut(S::Real, &[S], &mut [S]) -> Result<()>,
{
    let k = eval(rhs, state.x, &state.y)?;
    let out = state.with(state.x + dx, axpy(&state.y, dx, &k));
    out.check_finite()?;
    Ok(out)
}

/// y(x+dx) = y(x−dx) + 2 dx · rhs(x, y(x)).
pub fn step_leapfrog<S: Scalar, F>(
    prev: &FlowState<S>,
    curr: &FlowState<S>,
    dx: S::Real,
    rhs: &mut F,
) -> Result<FlowState<S>>
where
    F: FnMut(S::Real, &[S], &mut [S]) -> Result<()>,
{
    let k = eval(rhs, curr.x, &curr.y)?;
    let out = curr.with(curr.x + dx, axpy(&prev.y, dx + dx, &k));
    out.check_finite()?;
    Ok(out)
}

/// Leap-frog in temperature. With β = 1/(k_B τ) and `rhs` returning dS/dβ:
///
/// ```text
/// S(τ₊) = S(τ₋) + (1/(k_B τ₊) − 1/(k_B τ₋)) · dS/dβ(S(τ))
/// ```
///
/// States carry τ in `x`.
pub fn step_leapfrog_temperature<S: Scalar, F>(
    prev: &FlowState<S>,
    curr: &FlowState<S>,
    tau_next: S::Real,
    k_b: S::Real,
    rhs: &mut F,
) -> Result<FlowState<S>>
where
    F: FnMut(S::Real, &[S], &mut [S]) -> Result<()>,
{
    let (tp, tc) = (prev.x, curr.x);
    for t in [tp, tc, tau_next] {
        if !(t > S::Real::zero()) {
            return Err(NoeError::NonPositiveTemperature(t.to_f64_lossy()));
        }
    }
    let ascending = tp < tc && tc < tau_next;
    let descending = tp > tc && tc > tau_next;
    if !(ascending || descending) {
        return Err(NoeError::InvalidArgument(
            "temperatures must be strictly ordered".into(),
        ));
    }
    let beta = |t: S::Real| S::Real::one() / (k_b * t);
    let k = eval(rhs, beta(tc), &curr.y)?;
    let out = curr.with(tau_next, axpy(&prev.y, beta(tau_next) - beta(tp), &k));
    out.check_finite()?;
    Ok(out)
}

/// Fixed-step scheme selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Rk4,
    /// Two-level scheme seeded by one Euler step.
    Leapfrog,
}

impl std::str::FromStr for Integrator {
    type Err = NoeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "leapfrog" => Ok(Integrator::Leapfrog),
            other => Err(NoeError::InvalidArgument(format!(
                "unknown integrator `{other}` (expected rk4 or leapfrog)"
            ))),
        }
    }
}

impl Integrator {
    pub fn as_str(self) -> &'static str {
        match self {
            Integrator::Rk4 => "rk4",
            Integrator::Leapfrog => "leapfrog",
        }
    }
}

/// Takes `n_steps` steps of size `dx` from `start`, computing the abscissa of
/// step k as `x0 + k·dx`. `observe` sees the initial state and every accepted
/// state together with its step index.
pub fn run_fixed<S: Scalar, F, G>(
    start: FlowState<S>,
    dx: S::Real,
    n_steps: usize,
    integrator: Integrator,
    rhs: &mut F,
    observe: &mut G,
) -> Result<FlowState<S>>
where
    F: FnMut(S::Real, &[S], &mut [S]) -> Result<()>,
    G: FnMut(usize, &FlowState<S>) -> Result<()>,
{
    let x0 = start.x;
    let at = |k: usize| x0 + dx * S::Real::from_count(k);
    observe(0, &start)?;
    let mut prev: Option<FlowState<S>> = None;
    let mut curr = start;
    for k in 1..=n_steps {
        let mut next = match (integrator, &prev) {
            (Integrator::Rk4, _) => step_rk4(&curr, dx, rhs)?,
            (Integrator::Leapfrog, None) => step_euler(&curr, dx, rhs)?,
            (Integrator::Leapfrog, Some(p)) => step_leapfrog(p, &curr, dx, rhs)?,
        };
        next.x = at(k);
        observe(k, &next)?;
        if integrator == Integrator::Leapfrog {
            prev = Some(curr);
        }
        curr = next;
    }
    Ok(curr)
}

//! Penalty-adjusted disjoint LinUCB and baseline arm-selection policies.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metamorph::StrategyId;

pub const DIM: usize = 6;

pub type Matrix = [[f64; DIM]; DIM];
pub type Vector = [f64; DIM];

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("covariance matrix is not positive definite")]
    SingularMatrix,
}

/// Strategy one-hot, then historical performance, then bug frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextVec(pub Vector);

impl ContextVec {
    pub fn new(strategy: StrategyId, history: f64, frequency: f64) -> Self {
        let mut x = [0.0; DIM];
        x[strategy.index()] = 1.0;
        x[4] = history.clamp(0.0, 1.0);
        x[5] = frequency.clamp(0.0, 1.0);
        ContextVec(x)
    }

    pub fn frequency(&self) -> f64 {
        self.0[5]
    }
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-arm ridge-regression state: `A = I + Σ x xᵀ`, `b = Σ r x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub a: Matrix,
    pub b: Vector,
    pub pulls: u64,
    /// Sum of scalar rewards, used by the context-free baselines.
    pub reward_sum: f64,
}

impl Default for ArmState {
    fn default() -> Self {
        let mut a = [[0.0; DIM]; DIM];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            a,
            b: [0.0; DIM],
            pulls: 0,
            reward_sum: 0.0,
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &Matrix) -> Result<Matrix, BanditError> {
    let mut l = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(BanditError::SingularMatrix);
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b`.
fn cholesky_solve(l: &Matrix, b: &Vector) -> Vector {
    let mut y = [0.0; DIM];
    for i in 0..DIM {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0; DIM];
    for i in (0..DIM).rev() {
        let mut sum = y[i];
        for k in i + 1..DIM {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

impl ArmState {
    /// Solution of `A θ = b`.
    pub fn theta(&self) -> Result<Vector, BanditError> {
        let l = cholesky(&self.a)?;
        Ok(cholesky_solve(&l, &self.b))
    }

    /// `xᵀ θ`.
    pub fn estimate(&self, x: &ContextVec) -> Result<f64, BanditError> {
        Ok(dot(&x.0, &self.theta()?))
    }

    /// `sqrt(xᵀ A⁻¹ x)`, the confidence width before scaling by α.
    pub fn width(&self, x: &ContextVec) -> Result<f64, BanditError> {
        let l = cholesky(&self.a)?;
        let z = cholesky_solve(&l, &x.0);
        Ok(dot(&x.0, &z).max(0.0).sqrt())
    }

    pub fn ucb(&self, x: &ContextVec, cfg: &PolicyConfig, f_a: f64) -> Result<f64, BanditError> {
        Ok(adjust(self.estimate(x)?, f_a, cfg.beta) + cfg.alpha * self.width(x)?)
    }

    pub fn update(&mut self, x: &ContextVec, r: f64) {
        for i in 0..DIM {
            for j in 0..DIM {
                self.a[i][j] += x.0[i] * x.0[j];
            }
            self.b[i] += r * x.0[i];
        }
        self.pulls += 1;
        self.reward_sum += r;
    }

    pub fn mean_reward(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.reward_sum / self.pulls as f64
        }
    }
}

/// Penalized estimate `r̂ · exp(-β f_a)`.
pub fn adjust(r_hat: f64, f_a: f64, beta: f64) -> f64 {
    r_hat * (-beta * f_a).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Linucb,
    Random,
    EpsilonGreedy { epsilon: f64 },
    Thompson,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Linucb => "linucb",
            PolicyKind::Random => "random",
            PolicyKind::EpsilonGreedy { .. } => "epsilon",
            PolicyKind::Thompson => "thompson",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linucb" => Ok(PolicyKind::Linucb),
            "random" => Ok(PolicyKind::Random),
            "epsilon" | "epsilon_greedy" => Ok(PolicyKind::EpsilonGreedy { epsilon: 0.1 }),
            "thompson" => Ok(PolicyKind::Thompson),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub alpha: f64,
    pub beta: f64,
    pub policy: PolicyKind,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            policy: PolicyKind::Linucb,
        }
    }
}

/// One selectable arm as seen by [`select`].
#[derive(Clone, Copy, Debug)]
pub struct Candidate<'a> {
    pub id: StrategyId,
    pub state: &'a ArmState,
    pub context: ContextVec,
    pub f_a: f64,
}

/// Index of the largest score; ties go to the earliest entry.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Scores each candidate under the configured policy. Random draws come
/// from `rng`; LinUCB consumes none.
pub fn scores<R: Rng + ?Sized>(
    arms: &[Candidate<'_>],
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<Vec<f64>, BanditError> {
    match cfg.policy {
        PolicyKind::Linucb => arms
            .iter()
            .map(|c| c.state.ucb(&c.context, cfg, c.f_a))
            .collect(),
        PolicyKind::Random => Ok(arms.iter().map(|_| rng.random::<f64>()).collect()),
        PolicyKind::EpsilonGreedy { epsilon } => {
            if rng.random_bool(epsilon.clamp(0.0, 1.0)) {
                let pick = rng.random_range(0..arms.len());
                Ok((0..arms.len())
                    .map(|i| if i == pick { 1.0 } else { 0.0 })
                    .collect())
            } else {
                // Untried arms first, then the best empirical mean.
                Ok(arms
                    .iter()
                    .map(|c| {
                        if c.state.pulls == 0 {
                            f64::INFINITY
                        } else {
                            c.state.mean_reward()
                        }
                    })
                    .collect())
            }
        }
        PolicyKind::Thompson => Ok(arms
            .iter()
            .map(|c| {
                // Prior N(0, 1), unit-variance rewards.
                let n = c.state.pulls as f64;
                let mean = c.state.reward_sum / (n + 1.0);
                let sd = (1.0 / (n + 1.0)).sqrt();
                Normal::new(mean, sd).expect("positive sd").sample(rng)
            })
            .collect()),
    }
}

/// Picks an arm. Candidates should be listed in strategy-index order so the
/// tie rule favours the lowest index.
pub fn select<R: Rng + ?Sized>(
    arms: &[Candidate<'_>],
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<StrategyId, BanditError> {
    assert!(!arms.is_empty(), "select needs at least one arm");
    let s = scores(arms, cfg, rng)?;
    Ok(arms[argmax(&s)].id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e1() -> ContextVec {
        ContextVec([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn fresh_arm() {
        let a = ArmState::default();
        assert_eq!(a.theta().unwrap(), [0.0; DIM]);
        assert_eq!(
            a.estimate(&ContextVec([0.3, 0.1, 0.0, 0.0, 0.9, 0.4]))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn single_update() {
        let mut a = ArmState::default();
        a.update(&e1(), 1.0);
        assert_eq!(a.a[0][0], 2.0);
        assert_eq!(a.b, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let theta = a.theta().unwrap();
        assert!((theta[0] - 0.5).abs() < 1e-12);
        assert!((a.estimate(&e1()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn worked_context_value() {
        let x = ContextVec::new(StrategyId::DeadRegionInsert, 0.7, 0.2);
        let u = ArmState::default()
            .ucb(&x, &PolicyConfig::default(), 0.2)
            .unwrap();
        assert!((u - 1.53f64.sqrt()).abs() < 1e-9);
        assert!((adjust(1.0, 0.2, 0.5) - (-0.1f64).exp()).abs() < 1e-9);
        assert_eq!(adjust(0.0, 0.7, 0.5), 0.0);
        assert_eq!(adjust(1.0, 0.0, 0.5), 1.0);
    }

    #[test]
    fn width_shrinks_with_pulls() {
        let x = ContextVec::new(StrategyId::SubsystemPromote, 0.3, 0.1);
        let mut a = ArmState::default();
        let mut last = a.width(&x).unwrap();
        for _ in 0..20 {
            a.update(&x, 0.5);
            let w = a.width(&x).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let fresh = ArmState::default();
        let arms: Vec<Candidate> = StrategyId::ALL
            .iter()
            .map(|&id| Candidate {
                id,
                state: &fresh,
                context: ContextVec([0.0, 0.0, 0.0, 0.0, 0.5, 0.0]),
                f_a: 0.0,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            select(&arms, &PolicyConfig::default(), &mut rng).unwrap(),
            StrategyId::DeadRegionInsert
        );
    }

    #[test]
    fn dominant_arm_wins() {
        let fresh = ArmState::default();
        let mut strong = ArmState::default();
        let x = ContextVec::new(StrategyId::ModelTransfer, 0.0, 0.0);
        for _ in 0..50 {
            strong.update(&x, 10.0);
        }
        let arms: Vec<Candidate> = StrategyId::ALL
            .iter()
            .map(|&id| Candidate {
                id,
                state: if id == StrategyId::ModelTransfer {
                    &strong
                } else {
                    &fresh
                },
                context: ContextVec::new(id, 0.0, 0.0),
                f_a: 0.0,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            select(&arms, &PolicyConfig::default(), &mut rng).unwrap(),
            StrategyId::ModelTransfer
        );
    }

    #[test]
    fn random_policy_is_reproducible() {
        let fresh = ArmState::default();
        let arms: Vec<Candidate> = StrategyId::ALL
            .iter()
            .map(|&id| Candidate {
                id,
                state: &fresh,
                context: ContextVec::new(id, 0.0, 0.0),
                f_a: 0.0,
            })
            .collect();
        let cfg = PolicyConfig {
            policy: PolicyKind::Random,
            ..Default::default()
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| select(&arms, &cfg, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn non_pd_matrix_is_reported() {
        let mut a = ArmState::default();
        a.a[2][2] = -1.0;
        assert_eq!(a.theta(), Err(BanditError::SingularMatrix));
    }
}

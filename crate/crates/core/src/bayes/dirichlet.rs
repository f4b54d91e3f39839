use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::contingency::{observed_cells, CellProbs, ObservedTable};
use crate::error::{MseError, Result};

/// All-ones prior weights for a `k`-list table.
pub fn flat_alpha(k: usize) -> Vec<f64> {
    vec![1.0; observed_cells(k)]
}

/// `t` independent draws of `pi~` from `Dirichlet(alpha_h + n_h)`.
pub fn dirichlet_cond_posterior<R: Rng + ?Sized>(
    table: &ObservedTable,
    alpha: &[f64],
    t: usize,
    rng: &mut R,
) -> Result<Vec<CellProbs<f64>>> {
    if t == 0 {
        return Err(MseError::InvalidInput("need at least one draw".into()));
    }
    let shapes = posterior_shapes(table, alpha)?;
    (0..t).map(|_| draw_one(table.k(), &shapes, rng)).collect()
}

pub(crate) fn posterior_shapes(table: &ObservedTable, alpha: &[f64]) -> Result<Vec<Gamma<f64>>> {
    if alpha.len() != table.counts().len() {
        return Err(MseError::InvalidInput(format!(
            "alpha has {} entries, table has {} cells",
            alpha.len(),
            table.counts().len()
        )));
    }
    if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(MseError::InvalidInput("Dirichlet weights must be positive".into()));
    }
    alpha
        .iter()
        .zip(table.counts())
        .map(|(a, &c)| Gamma::new(a + c as f64, 1.0).map_err(|e| MseError::InvalidInput(e.to_string())))
        .collect()
}

pub(crate) fn draw_one<R: Rng + ?Sized>(
    k: usize,
    shapes: &[Gamma<f64>],
    rng: &mut R,
) -> Result<CellProbs<f64>> {
    let weights: Vec<f64> = shapes.iter().map(|g| g.sample(rng)).collect();
    CellProbs::from_weights(k, weights)
}

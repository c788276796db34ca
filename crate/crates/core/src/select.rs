//! Weighted candidates and roulette-wheel selection.

use num_traits::Float;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error("no candidates to choose from")]
    EmptyCandidates,
    #[error("candidate {index} has weight {weight}, expected a finite positive number")]
    InvalidWeight { index: usize, weight: String },
}

/// A candidate command, its selection weight and the generator (1..=5)
/// that proposed it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedCommand<W = f64> {
    pub command: String,
    pub weight: W,
    pub generator: u8,
}

impl<W> WeightedCommand<W> {
    pub fn new(command: impl Into<String>, weight: W, generator: u8) -> Self {
        WeightedCommand { command: command.into(), weight, generator }
    }
}

/// Index of the chosen candidate; candidate `i` wins with probability
/// `weight_i / sum(weights)`.
pub fn roulette_index<W: Float + std::fmt::Debug, R: Rng + ?Sized>(
    candidates: &[WeightedCommand<W>],
    rng: &mut R,
) -> Result<usize, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::EmptyCandidates);
    }
    let mut total = W::zero();
    for (index, c) in candidates.iter().enumerate() {
        if !(c.weight.is_finite() && c.weight > W::zero()) {
            return Err(SelectError::InvalidWeight { index, weight: format!("{:?}", c.weight) });
        }
        total = total + c.weight;
    }
    let draw: f64 = rng.gen();
    let mut target = W::from(draw).expect("unit interval fits any float") * total;
    for (i, c) in candidates.iter().enumerate() {
        if target < c.weight {
            return Ok(i);
        }
        target = target - c.weight;
    }
    // rounding left a sliver past the last boundary
    Ok(candidates.len() - 1)
}

pub fn roulette_select<'a, W: Float + std::fmt::Debug, R: Rng + ?Sized>(
    candidates: &'a [WeightedCommand<W>],
    rng: &mut R,
) -> Result<&'a str, SelectError> {
    roulette_index(candidates, rng).map(|i| candidates[i].command.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let none: Vec<WeightedCommand> = vec![];
        assert_eq!(roulette_select(&none, &mut rng), Err(SelectError::EmptyCandidates));
        let bad = vec![WeightedCommand::new("a", 1.0, 1), WeightedCommand::new("b", 0.0, 1)];
        assert!(matches!(roulette_select(&bad, &mut rng), Err(SelectError::InvalidWeight { index: 1, .. })));
        let nan = vec![WeightedCommand::new("a", f32::NAN, 1)];
        assert!(roulette_select(&nan, &mut rng).is_err());
    }

    #[test]
    fn singleton_always_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = vec![WeightedCommand::new("look", 1e-4, 4)];
        for _ in 0..100 {
            assert_eq!(roulette_select(&one, &mut rng).unwrap(), "look");
        }
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::normal_form::{characteristic_value, NormalFormGame};
use super::GameError;

pub const MAX_COALITION_PLAYERS: usize = 20;
pub const MAX_CHARACTERISTIC_PLAYERS: usize = 10;
pub const MAX_CORE_SEARCH_PLAYERS: usize = 6;
/// Upper bound on grid points visited by [`core_empty`].
pub const MAX_GRID_POINTS: u128 = 50_000_000;
pub const DEFAULT_EPS: f64 = 1e-9;

/// Set of players as a bitmask; bit `i` is player `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coalition(pub u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn of(players: &[usize]) -> Self {
        Coalition(players.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn grand(n: usize) -> Self {
        Coalition(((1u64 << n) - 1) as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, player: usize) -> bool {
        player < 32 && self.0 & (1 << player) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// True if no member index is `>= n`.
    pub fn fits(&self, n: usize) -> bool {
        n >= 32 || self.0 >> n == 0
    }

    pub fn members(&self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |i| mask & (1 << i) != 0)
    }
}

/// All nonempty subsets of `n` players in ascending bitmask order.
pub fn enumerate_coalitions(n: usize) -> Result<Vec<Coalition>, GameError> {
    if n == 0 {
        return Err(GameError::NoPlayers);
    }
    if n > MAX_COALITION_PLAYERS {
        return Err(GameError::TooLarge(format!(
            "{n} players (coalition enumeration supports at most {MAX_COALITION_PLAYERS})"
        )));
    }
    Ok((1..(1u32 << n)).map(Coalition).collect())
}

/// Value of every nonempty coalition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CharacteristicFile", into = "CharacteristicFile")]
pub struct CharacteristicFunction {
    players: usize,
    /// Indexed by `mask - 1`.
    values: Vec<f64>,
}

/// On-disk form: values keyed by the decimal bitmask of each coalition.
///
/// ```json
/// {"players": 2, "values": {"1": 1, "2": 1, "3": 6}}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicFile {
    pub players: usize,
    pub values: BTreeMap<u32, f64>,
}

impl TryFrom<CharacteristicFile> for CharacteristicFunction {
    type Error = GameError;

    fn try_from(file: CharacteristicFile) -> Result<Self, GameError> {
        CharacteristicFunction::from_map(file.players, &file.values)
    }
}

impl From<CharacteristicFunction> for CharacteristicFile {
    fn from(v: CharacteristicFunction) -> Self {
        CharacteristicFile {
            players: v.players,
            values: v
                .values
                .iter()
                .enumerate()
                .map(|(i, &x)| (i as u32 + 1, x))
                .collect(),
        }
    }
}

impl CharacteristicFunction {
    /// Builds `v` by evaluating `value` on every nonempty coalition.
    pub fn from_fn(
        players: usize,
        mut value: impl FnMut(Coalition) -> f64,
    ) -> Result<Self, GameError> {
        let coalitions = enumerate_coalitions(players)?;
        let values: Vec<f64> = coalitions.into_iter().map(&mut value).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GameError::Shape("coalition values must be finite".into()));
        }
        Ok(Self { players, values })
    }

    /// Requires exactly one entry per nonempty coalition.
    pub fn from_map(players: usize, values: &BTreeMap<u32, f64>) -> Result<Self, GameError> {
        let expected = enumerate_coalitions(players)?.len();
        if values.len() != expected || values.keys().any(|&k| k == 0 || k as usize > expected) {
            return Err(GameError::Shape(format!(
                "expected values for all {expected} nonempty coalitions (keys 1..={expected})"
            )));
        }
        Self::from_fn(players, |s| values[&s.0])
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, coalition: Coalition) -> f64 {
        self.values[coalition.0 as usize - 1]
    }

    pub fn grand_value(&self) -> f64 {
        self.value(Coalition::grand(self.players))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (Coalition(i as u32 + 1), v))
    }
}

/// Maximin value of every coalition of `game`.
pub fn build_characteristic(game: &NormalFormGame) -> Result<CharacteristicFunction, GameError> {
    let n = game.players();
    if n > MAX_CHARACTERISTIC_PLAYERS {
        return Err(GameError::TooLarge(format!(
            "{n} players (characteristic function supports at most {MAX_CHARACTERISTIC_PLAYERS})"
        )));
    }
    let work = (game.profile_count() as u128) << n;
    if work > 1 << 30 {
        return Err(GameError::TooLarge(format!(
            "{} profiles across {} coalitions",
            game.profile_count(),
            (1u64 << n) - 1
        )));
    }
    let mut err = None;
    let v = CharacteristicFunction::from_fn(n, |s| match characteristic_value(game, s) {
        Ok(x) => x,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Proposed split of the grand coalition's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<f64>);

impl Allocation {
    pub fn coalition_total(&self, coalition: Coalition) -> f64 {
        coalition.members().map(|i| self.0[i]).sum()
    }
}

/// Whether no coalition could secede and do better than `x` gives it.
///
/// `x` must be efficient: its total must match `v([n])` within `eps`.
pub fn in_core(x: &Allocation, v: &CharacteristicFunction, eps: f64) -> Result<bool, GameError> {
    if x.0.len() != v.players() {
        return Err(GameError::Shape(format!(
            "allocation has {} entries for {} players",
            x.0.len(),
            v.players()
        )));
    }
    let total: f64 = x.0.iter().sum();
    let gap = total - v.grand_value();
    if gap.abs() > eps {
        return Err(GameError::Inefficient {
            total,
            grand_value: v.grand_value(),
            gap,
        });
    }
    Ok(v.iter()
        .all(|(s, value)| x.coalition_total(s) >= value - eps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CoreSearch {
    Nonempty {
        witness: Allocation,
    },
    /// No grid point passed; the core may still hold points off the grid.
    EmptyAtResolution {
        grid_step: f64,
    },
}

/// Grid search of the efficient simplex for a core allocation.
///
/// Each player is scanned upward from its stand-alone value `v({i})` in
/// steps of `grid_step`; the last player takes the remainder. Allocations
/// below any stand-alone value can never be in the core, so they are skipped.
pub fn core_empty(
    v: &CharacteristicFunction,
    grid_step: f64,
    eps: f64,
) -> Result<CoreSearch, GameError> {
    let n = v.players();
    if n > MAX_CORE_SEARCH_PLAYERS {
        return Err(GameError::TooLarge(format!(
            "{n} players (core search supports at most {MAX_CORE_SEARCH_PLAYERS})"
        )));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(GameError::Shape(format!(
            "grid_step must be positive, got {grid_step}"
        )));
    }
    let floors: Vec<f64> = (0..n).map(|i| v.value(Coalition::of(&[i]))).collect();
    let slack = v.grand_value() - floors.iter().sum::<f64>();
    if slack < -eps {
        return Ok(CoreSearch::EmptyAtResolution { grid_step });
    }
    let steps = (slack.max(0.0) / grid_step + 1e-9).floor();
    let points = grid_points(steps as u128, n);
    if steps > u32::MAX as f64 || points > MAX_GRID_POINTS {
        return Err(GameError::TooLarge(format!(
            "grid of about {points} points; use a coarser step"
        )));
    }
    let steps = steps as u64;
    let mut ks = vec![0u64; n.saturating_sub(1)];
    let mut x = vec![0.0; n];
    loop {
        let used: u64 = ks.iter().sum();
        if used <= steps {
            for (i, &k) in ks.iter().enumerate() {
                x[i] = floors[i] + k as f64 * grid_step;
            }
            let head: f64 = x[..n - 1].iter().sum();
            x[n - 1] = v.grand_value() - head;
            let candidate = Allocation(x.clone());
            if in_core(&candidate, v, eps)? {
                return Ok(CoreSearch::Nonempty { witness: candidate });
            }
        }
        // advance the odometer, skipping branches that overshoot the budget
        let mut slot = ks.len();
        loop {
            if slot == 0 {
                return Ok(CoreSearch::EmptyAtResolution { grid_step });
            }
            slot -= 1;
            ks[slot] += 1;
            if ks[..=slot].iter().sum::<u64>() <= steps {
                break;
            }
            ks[slot] = 0;
        }
    }
}

// Number of ways to spread `steps` units over `n` players: C(steps + n - 1, n - 1).
fn grid_points(steps: u128, n: usize) -> u128 {
    let k = n.saturating_sub(1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.saturating_mul(steps + i) / i;
        if acc > MAX_GRID_POINTS * 1000 {
            return acc;
        }
    }
    acc
}

use serde::{Deserialize, Serialize};

use super::{Coalition, GameError};

/// Hard cap on the number of pure profiles a game table may hold.
pub const MAX_PROFILES: usize = 1 << 22;

/// Chosen strategy index for each player.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile(pub Vec<usize>);

/// Finite n-player game with a dense payoff table.
///
/// Profiles are stored row-major: the last player's strategy varies fastest,
/// and each profile holds one payoff per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameFile", into = "GameFile")]
pub struct NormalFormGame {
    strategy_counts: Vec<usize>,
    payoffs: Vec<f64>,
    strategy_names: Option<Vec<Vec<String>>>,
}

/// On-disk form of a game.
///
/// ```json
/// {"players": 2, "strategy_counts": [2, 2],
///  "payoffs": [[3, 3], [0, 5], [5, 0], [1, 1]],
///  "strategy_names": [["C", "D"], ["C", "D"]]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: usize,
    pub strategy_counts: Vec<usize>,
    pub payoffs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy_names: Option<Vec<Vec<String>>>,
}

impl TryFrom<GameFile> for NormalFormGame {
    type Error = GameError;

    fn try_from(file: GameFile) -> Result<Self, GameError> {
        if file.players != file.strategy_counts.len() {
            return Err(GameError::Shape(format!(
                "players is {} but strategy_counts has {} entries",
                file.players,
                file.strategy_counts.len()
            )));
        }
        let n = file.players;
        if let Some((i, row)) = file.payoffs.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(GameError::Shape(format!(
                "payoffs[{i}] has {} entries, expected {n}",
                row.len()
            )));
        }
        let flat = file.payoffs.into_iter().flatten().collect();
        let mut game = NormalFormGame::new(file.strategy_counts, flat)?;
        if let Some(names) = file.strategy_names {
            game = game.with_strategy_names(names)?;
        }
        Ok(game)
    }
}

impl From<NormalFormGame> for GameFile {
    fn from(game: NormalFormGame) -> Self {
        let n = game.players();
        GameFile {
            players: n,
            payoffs: game.payoffs.chunks(n).map(<[f64]>::to_vec).collect(),
            strategy_counts: game.strategy_counts,
            strategy_names: game.strategy_names,
        }
    }
}

impl NormalFormGame {
    /// `payoffs` is the flattened table: `profile_count * players` values.
    pub fn new(strategy_counts: Vec<usize>, payoffs: Vec<f64>) -> Result<Self, GameError> {
        let n = strategy_counts.len();
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if n > 20 {
            return Err(GameError::TooLarge(format!("{n} players")));
        }
        if let Some(i) = strategy_counts.iter().position(|&c| c == 0) {
            return Err(GameError::Shape(format!("player {i} has no strategies")));
        }
        let profiles = strategy_counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&p| p <= MAX_PROFILES)
            .ok_or_else(|| GameError::TooLarge("profile table".into()))?;
        if payoffs.len() != profiles * n {
            return Err(GameError::Shape(format!(
                "expected {} payoff values ({profiles} profiles x {n} players), got {}",
                profiles * n,
                payoffs.len()
            )));
        }
        if payoffs.iter().any(|p| !p.is_finite()) {
            return Err(GameError::Shape("payoffs must be finite".into()));
        }
        Ok(Self {
            strategy_counts,
            payoffs,
            strategy_names: None,
        })
    }

    pub fn with_strategy_names(mut self, names: Vec<Vec<String>>) -> Result<Self, GameError> {
        let ok = names.len() == self.players()
            && names
                .iter()
                .zip(&self.strategy_counts)
                .all(|(n, &c)| n.len() == c);
        if !ok {
            return Err(GameError::Shape(
                "strategy_names must list one name per strategy per player".into(),
            ));
        }
        self.strategy_names = Some(names);
        Ok(self)
    }

    pub fn players(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn profile_count(&self) -> usize {
        self.payoffs.len() / self.players()
    }

    pub fn strategy_name(&self, player: usize, strategy: usize) -> String {
        self.strategy_names
            .as_ref()
            .map_or_else(|| strategy.to_string(), |n| n[player][strategy].clone())
    }

    /// Row-major position of a profile.
    pub fn index_of(&self, profile: &[usize]) -> usize {
        profile
            .iter()
            .zip(&self.strategy_counts)
            .fold(0, |acc, (&s, &c)| acc * c + s)
    }

    pub fn profile_at(&self, mut index: usize) -> StrategyProfile {
        let mut out = vec![0; self.players()];
        for (slot, &c) in out.iter_mut().zip(&self.strategy_counts).rev() {
            *slot = index % c;
            index /= c;
        }
        StrategyProfile(out)
    }

    /// Payoffs of every player at `profile`.
    pub fn payoffs(&self, profile: &[usize]) -> &[f64] {
        let n = self.players();
        let at = self.index_of(profile) * n;
        &self.payoffs[at..at + n]
    }

    pub fn payoff(&self, profile: &[usize], player: usize) -> f64 {
        self.payoffs(profile)[player]
    }

    pub fn profiles(&self) -> impl Iterator<Item = StrategyProfile> + '_ {
        (0..self.profile_count()).map(|i| self.profile_at(i))
    }
}

/// Profiles where no player gains by deviating alone, in ascending order.
pub fn pure_nash(game: &NormalFormGame) -> Vec<StrategyProfile> {
    let mut out = Vec::new();
    let mut deviated = vec![0; game.players()];
    for profile in game.profiles() {
        let stable = (0..game.players()).all(|player| {
            let current = game.payoff(&profile.0, player);
            deviated.copy_from_slice(&profile.0);
            (0..game.strategy_counts[player]).all(|alt| {
                deviated[player] = alt;
                current >= game.payoff(&deviated, player)
            })
        });
        if stable {
            out.push(profile);
        }
    }
    out
}

/// Best total payoff `coalition` can guarantee against a jointly minimizing
/// complement, over pure strategies.
pub fn characteristic_value(game: &NormalFormGame, coalition: Coalition) -> Result<f64, GameError> {
    let all: Vec<Vec<usize>> = game
        .strategy_counts
        .iter()
        .map(|&c| (0..c).collect())
        .collect();
    characteristic_value_over(game, coalition, &all)
}

/// As [`characteristic_value`], with the coalition restricted to the
/// strategies listed in `allowed[player]` (entries for non-members are ignored).
pub fn characteristic_value_over(
    game: &NormalFormGame,
    coalition: Coalition,
    allowed: &[Vec<usize>],
) -> Result<f64, GameError> {
    let n = game.players();
    if coalition.is_empty() {
        return Err(GameError::EmptyCoalition);
    }
    if !coalition.fits(n) {
        return Err(GameError::Shape(format!(
            "coalition {coalition:?} names players beyond {n}"
        )));
    }
    if allowed.len() != n {
        return Err(GameError::Shape("allowed must list every player".into()));
    }
    let members: Vec<usize> = coalition.members().collect();
    for &i in &members {
        if allowed[i].is_empty() || allowed[i].iter().any(|&s| s >= game.strategy_counts[i]) {
            return Err(GameError::Shape(format!(
                "player {i} has an empty or out-of-range strategy set"
            )));
        }
    }
    let rest: Vec<usize> = (0..n).filter(|i| !coalition.contains(*i)).collect();
    let member_choices: Vec<&[usize]> = members.iter().map(|&i| allowed[i].as_slice()).collect();
    let full: Vec<Vec<usize>> = game
        .strategy_counts
        .iter()
        .map(|&c| (0..c).collect())
        .collect();
    let rest_choices: Vec<&[usize]> = rest.iter().map(|&i| full[i].as_slice()).collect();

    let mut profile = vec![0; n];
    let mut best = f64::NEG_INFINITY;
    for ours in JointChoices::new(&member_choices) {
        for (&i, &s) in members.iter().zip(&ours) {
            profile[i] = s;
        }
        let mut worst = f64::INFINITY;
        for theirs in JointChoices::new(&rest_choices) {
            for (&i, &s) in rest.iter().zip(&theirs) {
                profile[i] = s;
            }
            let payoffs = game.payoffs(&profile);
            let total: f64 = members.iter().map(|&i| payoffs[i]).sum();
            worst = worst.min(total);
        }
        best = best.max(worst);
    }
    Ok(best)
}

/// Odometer over the cartesian product of per-slot choice lists. An empty
/// slot list yields exactly one empty combination.
struct JointChoices<'a> {
    choices: &'a [&'a [usize]],
    cursor: Vec<usize>,
    done: bool,
}

impl<'a> JointChoices<'a> {
    fn new(choices: &'a [&'a [usize]]) -> Self {
        Self {
            choices,
            cursor: vec![0; choices.len()],
            done: choices.iter().any(|c| c.is_empty()),
        }
    }
}

impl Iterator for JointChoices<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let item = self
            .cursor
            .iter()
            .zip(self.choices)
            .map(|(&k, c)| c[k])
            .collect();
        self.done = true;
        for slot in (0..self.cursor.len()).rev() {
            self.cursor[slot] += 1;
            if self.cursor[slot] < self.choices[slot].len() {
                self.done = false;
                break;
            }
            self.cursor[slot] = 0;
        }
        Some(item)
    }
}

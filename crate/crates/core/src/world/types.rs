use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stable index of a state within a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Wealth and arms stocks of one state. Both are kept non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Resources {
    pub wealth: f64,
    pub arms: f64,
}

impl Resources {
    pub fn new(wealth: f64, arms: f64) -> Self {
        Self {
            wealth: wealth.max(0.0),
            arms: arms.max(0.0),
        }
    }

    /// Combined value with arms converted at `arms_price`.
    pub fn value(&self, arms_price: f64) -> f64 {
        self.wealth + arms_price * self.arms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Mercantile,
    Militarist,
    Mixed,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Mercantile,
        StrategyKind::Militarist,
        StrategyKind::Mixed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Mercantile => "mercantile",
            StrategyKind::Militarist => "militarist",
            StrategyKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// What a state remembers about its dealings with others.
///
/// `abandoned_tribute` is monotone: once a tribute receiver has attacked its
/// tributary it is never paid again.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiplomaticMemory {
    pub abandoned_tribute: BTreeSet<AgentId>,
    /// First turn tribute was paid to each receiver.
    pub tribute_paid_to: BTreeMap<AgentId, u64>,
    /// Turns on which each attacker struck this state.
    pub attacked_by: BTreeMap<AgentId, Vec<u64>>,
}

impl DiplomaticMemory {
    pub fn has_been_attacked_by(&self, id: AgentId) -> bool {
        self.attacked_by
            .get(&id)
            .is_some_and(|turns| !turns.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAgent {
    pub id: AgentId,
    pub name: String,
    pub strategy: StrategyKind,
    pub resources: Resources,
    #[serde(default)]
    pub memory: DiplomaticMemory,
}

/// One state's choice for a turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    BuildArms,
    Trade { partner: AgentId },
    PayTribute { receiver: AgentId },
    Attack { target: AgentId },
    ProposeAlliance { partner: AgentId },
    Idle,
}

impl Action {
    /// The other state this action is directed at, if any.
    pub fn counterpart(&self) -> Option<AgentId> {
        match *self {
            Action::Trade { partner } | Action::ProposeAlliance { partner } => Some(partner),
            Action::PayTribute { receiver } => Some(receiver),
            Action::Attack { target } => Some(target),
            Action::BuildArms | Action::Idle => None,
        }
    }
}

/// Numeric rules of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    /// Trade surplus as a fraction of the poorer partner's wealth.
    pub trade_gain: f64,
    /// Share of the surplus taken by a mercantile state trading with a non-mercantile one.
    pub mercantile_share: f64,
    pub tribute_rate: f64,
    pub loot_rate: f64,
    pub attrition: f64,
    pub ally_support: f64,
    /// Fraction of wealth converted into arms by a build.
    pub build_fraction: f64,
    /// Arms gained per wealth unit spent on a build.
    pub build_rate: f64,
    pub threat_ratio: f64,
    pub desperation_threshold: f64,
    /// Wealth units per arms unit, used only for value accounting.
    pub arms_price: f64,
    /// Extra turns allowed when the richest and best-armed states differ.
    pub max_extensions: u64,
    /// Half-width of the uniform loot multiplier when combat noise is enabled.
    pub noise_spread: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            trade_gain: 0.10,
            mercantile_share: 0.60,
            tribute_rate: 0.10,
            loot_rate: 0.50,
            attrition: 0.20,
            ally_support: 0.50,
            build_fraction: 0.25,
            build_rate: 1.0,
            threat_ratio: 1.5,
            desperation_threshold: 10.0,
            arms_price: 1.0,
            max_extensions: 5,
            noise_spread: 0.25,
        }
    }
}

impl EngineParams {
    /// Every violated constraint, as `"field: message"` strings.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fractions = [
            ("trade_gain", self.trade_gain),
            ("tribute_rate", self.tribute_rate),
            ("loot_rate", self.loot_rate),
            ("attrition", self.attrition),
            ("ally_support", self.ally_support),
            ("build_fraction", self.build_fraction),
            ("noise_spread", self.noise_spread),
        ];
        for (name, value) in fractions {
            if !(0.0..=1.0).contains(&value) {
                out.push(format!("{name} out of [0,1]: {value}"));
            }
        }
        if !(self.mercantile_share > 0.5 && self.mercantile_share < 1.0) {
            out.push(format!(
                "mercantile_share out of (0.5,1): {}",
                self.mercantile_share
            ));
        }
        if !(self.build_rate.is_finite() && self.build_rate >= 0.0) {
            out.push(format!(
                "build_rate must be finite and >= 0: {}",
                self.build_rate
            ));
        }
        if !(self.threat_ratio.is_finite() && self.threat_ratio >= 1.0) {
            out.push(format!("threat_ratio must be >= 1: {}", self.threat_ratio));
        }
        if !(self.desperation_threshold.is_finite() && self.desperation_threshold >= 0.0) {
            out.push(format!(
                "desperation_threshold must be finite and >= 0: {}",
                self.desperation_threshold
            ));
        }
        if !(self.arms_price.is_finite() && self.arms_price > 0.0) {
            out.push(format!("arms_price must be > 0: {}", self.arms_price));
        }
        out
    }
}

/// Optional rule switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Features {
    pub alliances_enabled: bool,
    pub trade_enabled: bool,
    pub combat_noise: bool,
}

impl Default for Features {
    fn default() -> Self {
        Self {
            alliances_enabled: false,
            trade_enabled: true,
            combat_noise: false,
        }
    }
}

/// Everything a policy or the engine needs to know about the rules in force.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rules {
    pub params: EngineParams,
    pub features: Features,
}

/// Unordered pair of allied states, stored with the lower id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AlliancePair(AgentId, AgentId);

impl AlliancePair {
    /// Returns `None` for a self-pair.
    pub fn new(a: AgentId, b: AgentId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self(a, b)),
            std::cmp::Ordering::Greater => Some(Self(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn members(&self) -> (AgentId, AgentId) {
        (self.0, self.1)
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.0 == id || self.1 == id
    }

    /// The member that is not `id`, if `id` is a member.
    pub fn other(&self, id: AgentId) -> Option<AgentId> {
        if self.0 == id {
            Some(self.1)
        } else if self.1 == id {
            Some(self.0)
        } else {
            None
        }
    }
}

/// The publicly recordable part of a world: everything except the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub turn: u64,
    pub agents: Vec<StateAgent>,
    pub alliances: BTreeSet<AlliancePair>,
}

impl Snapshot {
    pub fn total_wealth(&self) -> f64 {
        self.agents.iter().map(|a| a.resources.wealth).sum()
    }

    pub fn total_arms(&self) -> f64 {
        self.agents.iter().map(|a| a.resources.arms).sum()
    }

    pub fn total_value(&self, arms_price: f64) -> f64 {
        self.total_wealth() + arms_price * self.total_arms()
    }

    pub fn agent(&self, id: AgentId) -> Option<&StateAgent> {
        self.agents.get(id.0).filter(|a| a.id == id)
    }

    pub fn allies_of(&self, id: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.alliances.iter().filter_map(move |p| p.other(id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub turn: u64,
    pub agents: Vec<StateAgent>,
    pub alliances: BTreeSet<AlliancePair>,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    /// Builds a world from agents in id order; ids are reassigned to positions.
    pub fn new(agents: Vec<StateAgent>, seed: u64) -> Self {
        let agents = agents
            .into_iter()
            .enumerate()
            .map(|(i, mut a)| {
                a.id = AgentId(i);
                a
            })
            .collect();
        Self {
            turn: 0,
            agents,
            alliances: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_snapshot(snapshot: Snapshot, seed: u64) -> Self {
        Self {
            turn: snapshot.turn,
            agents: snapshot.agents,
            alliances: snapshot.alliances,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            turn: self.turn,
            agents: self.agents.clone(),
            alliances: self.alliances.clone(),
        }
    }

    pub fn agent(&self, id: AgentId) -> Option<&StateAgent> {
        self.agents.get(id.0).filter(|a| a.id == id)
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.agent(id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents.iter().map(|a| a.id)
    }
}

/// What actually happened when actions were resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolvedEvent {
    TradeExecuted {
        a: AgentId,
        b: AgentId,
        gain_a: f64,
        gain_b: f64,
    },
    TributePaid {
        payer: AgentId,
        receiver: AgentId,
        amount: f64,
    },
    TributeRefused {
        payer: AgentId,
        receiver: AgentId,
    },
    AttackResolved {
        attacker: AgentId,
        defender: AgentId,
        loot: f64,
        attacker_arms_loss: f64,
        defender_arms_loss: f64,
        /// Arms contributed by the defender's allies, already weighted.
        ally_support_arms: f64,
    },
    AllianceFormed {
        a: AgentId,
        b: AgentId,
    },
    ArmsBuilt {
        agent: AgentId,
        wealth_spent: f64,
        arms_gained: f64,
    },
    NoOp {
        agent: AgentId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: u64,
    /// Indexed by agent id.
    pub actions: Vec<Action>,
    pub events: Vec<ResolvedEvent>,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Agent(AgentId),
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualWinnerNote {
    pub absolute_winner: AgentId,
    pub relative_winner: AgentId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    /// By final wealth, richest first.
    pub absolute_ranking: Vec<AgentId>,
    /// By final arms, best armed first.
    pub relative_ranking: Vec<AgentId>,
    pub overall_winner: Winner,
    pub extensions_used: u64,
    pub dual_winner_note: Option<DualWinnerNote>,
}

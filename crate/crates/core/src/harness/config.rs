use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::world::{
    AgentId, DiplomaticMemory, EngineParams, Features, Resources, Rules, StateAgent, StrategyKind,
};

pub const DEFAULT_HORIZON: u64 = 10;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub strategy: StrategyKind,
    pub wealth: f64,
    pub arms: f64,
}

impl AgentSpec {
    /// Starting endowment for an archetype: equal wealth, arms by priority.
    pub fn default_for(strategy: StrategyKind) -> Self {
        let arms = match strategy {
            StrategyKind::Militarist => 20.0,
            StrategyKind::Mixed => 10.0,
            StrategyKind::Mercantile => 5.0,
        };
        Self {
            name: strategy.to_string(),
            strategy,
            wealth: 100.0,
            arms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub agents: Vec<AgentSpec>,
    pub params: EngineParams,
    pub features: Features,
    pub horizon: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            agents: StrategyKind::ALL
                .into_iter()
                .map(AgentSpec::default_for)
                .collect(),
            params: EngineParams::default(),
            features: Features::default(),
            horizon: DEFAULT_HORIZON,
        }
    }
}

impl ScenarioConfig {
    pub fn rules(&self) -> Rules {
        Rules {
            params: self.params,
            features: self.features,
        }
    }

    pub fn initial_agents(&self) -> Vec<StateAgent> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, spec)| StateAgent {
                id: AgentId(i),
                name: spec.name.clone(),
                strategy: spec.strategy,
                resources: Resources::new(spec.wealth, spec.arms),
                memory: DiplomaticMemory::default(),
            })
            .collect()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.agents.is_empty() {
            out.push("agents: at least one agent is required".to_string());
        }
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.wealth.is_finite() && a.wealth >= 0.0) {
                out.push(format!(
                    "agents[{i}].wealth must be finite and >= 0: {}",
                    a.wealth
                ));
            }
            if !(a.arms.is_finite() && a.arms >= 0.0) {
                out.push(format!(
                    "agents[{i}].arms must be finite and >= 0: {}",
                    a.arms
                ));
            }
        }
        out.extend(self.params.violations());
        out
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses a JSON scenario document, filling defaults and reporting every
/// problem found rather than just the first.
///
/// ```json
/// {
///   "agents": [{"name": "venice", "strategy": "mercantile", "arms": 3}],
///   "params": {"tribute_rate": 0.2},
///   "features": {"trade_enabled": false},
///   "horizon": 50
/// }
/// ```
///
/// Every field is optional. Missing agents default to one state of each
/// archetype; missing agent stocks default to the archetype endowment.
pub fn load_config(document: &str) -> Result<ScenarioConfig, ConfigError> {
    let root: Value =
        serde_json::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let Value::Object(mut root) = root else {
        return Err(ConfigError::Parse("top level must be an object".into()));
    };
    let mut errors = Vec::new();
    let mut config = ScenarioConfig::default();

    if let Some(agents) = root.remove("agents") {
        match agents {
            Value::Array(items) => {
                config.agents = items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, item)| parse_agent(i, item, &mut errors))
                    .collect();
            }
            _ => errors.push("agents: expected a list".into()),
        }
    }
    if let Some(params) = root.remove("params") {
        match serde_json::from_value::<EngineParams>(params) {
            Ok(p) => config.params = p,
            Err(e) => errors.push(format!("params: {e}")),
        }
    }
    if let Some(features) = root.remove("features") {
        match serde_json::from_value::<Features>(features) {
            Ok(f) => config.features = f,
            Err(e) => errors.push(format!("features: {e}")),
        }
    }
    if let Some(horizon) = root.remove("horizon") {
        match horizon.as_u64() {
            Some(h) => config.horizon = h,
            None => errors.push(format!(
                "horizon: expected a non-negative integer, got {horizon}"
            )),
        }
    }
    for key in root.keys() {
        errors.push(format!("{key}: unknown field"));
    }

    errors.extend(config.violations());
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(errors))
    }
}

fn parse_agent(index: usize, item: &Value, errors: &mut Vec<String>) -> Option<AgentSpec> {
    let Value::Object(fields) = item else {
        errors.push(format!("agents[{index}]: expected an object"));
        return None;
    };
    let strategy = match fields.get("strategy").and_then(Value::as_str) {
        Some(s) => match s.parse::<StrategyKind>() {
            Ok(k) => Some(k),
            Err(_) => {
                errors.push(format!("agents[{index}].strategy: unknown strategy {s:?}"));
                None
            }
        },
        None => {
            errors.push(format!("agents[{index}].strategy: missing"));
            None
        }
    };
    for key in fields.keys() {
        if !matches!(key.as_str(), "name" | "strategy" | "wealth" | "arms") {
            errors.push(format!("agents[{index}].{key}: unknown field"));
        }
    }
    let mut number = |key: &str| match fields.get(key) {
        None => None,
        Some(v) => match v.as_f64() {
            Some(x) => Some(x),
            None => {
                errors.push(format!("agents[{index}].{key}: expected a number"));
                None
            }
        },
    };
    let wealth = number("wealth");
    let arms = number("arms");
    let strategy = strategy?;
    let defaults = AgentSpec::default_for(strategy);
    let name = match fields.get("name") {
        Some(Value::String(s)) => s.clone(),
        _ => defaults.name.clone(),
    };
    Some(AgentSpec {
        name,
        strategy,
        wealth: wealth.unwrap_or(defaults.wealth),
        arms: arms.unwrap_or(defaults.arms),
    })
}

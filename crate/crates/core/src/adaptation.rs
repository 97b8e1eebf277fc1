//! Rule-based behaviour adaptation.
//!
//! Rules are loaded from JSON and evaluated in order. Each [`Directive`]
//! field independently takes the override of the first matching rule that
//! sets it, falling back to `formal / serious / neutral`.
//!
//! ```json
//! [
//!   { "rule_id": "young-informal",
//!     "condition": [ { "field": "age_range", "op": "in", "values": ["0-17", "18-24", "25-34"] } ],
//!     "overrides": { "register": "informal", "tone": "playful" } },
//!   { "rule_id": "mirror-mood",
//!     "condition": [ { "field": "dominant_emotion", "op": "present" } ],
//!     "overrides": { "expression": "mirror" } }
//! ]
//! ```
//!
//! A condition is a list of clauses that must all hold; an empty list
//! always matches. Clause fields are attribute keys from the schema, or
//! the special `dominant_emotion` and `interaction_count`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::de;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::protocol::{Directive, Expression, Register, Tone};
use crate::user_model::{AttributeSchema, Emotion, UserRecord};
use crate::ConfigError;

const DEFAULT_RULES: &str = include_str!("../config/rules.json");

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Field {
    Attribute(String),
    DominantEmotion,
    InteractionCount,
}

impl Field {
    fn name(&self) -> &str {
        match self {
            Field::Attribute(key) => key,
            Field::DominantEmotion => "dominant_emotion",
            Field::InteractionCount => "interaction_count",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Field {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match String::deserialize(deserializer)?.as_str() {
            "dominant_emotion" => Field::DominantEmotion,
            "interaction_count" => Field::InteractionCount,
            other => Field::Attribute(other.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Clause {
    Equals {
        field: Field,
        value: String,
    },
    In {
        field: Field,
        values: Vec<String>,
    },
    /// Only valid on `interaction_count`.
    AtLeast {
        field: Field,
        value: u64,
    },
    Present {
        field: Field,
    },
}

/// What a rule sets the expression to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpressionOverride {
    /// Show the user's current dominant emotion; does not apply when there
    /// is none.
    Mirror,
    Fixed(Expression),
}

impl Serialize for ExpressionOverride {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExpressionOverride::Mirror => serializer.serialize_str("mirror"),
            ExpressionOverride::Fixed(e) => e.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for ExpressionOverride {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s == "mirror" {
            return Ok(ExpressionOverride::Mirror);
        }
        s.parse().map(ExpressionOverride::Fixed).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register: Option<Register>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tone: Option<Tone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<ExpressionOverride>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub rule_id: String,
    #[serde(default)]
    pub condition: Vec<Clause>,
    pub overrides: Overrides,
}

/// What rules are evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct Facts<'a> {
    pub record: &'a UserRecord,
    pub dominant: Option<Emotion>,
}

impl Clause {
    pub fn field(&self) -> &Field {
        match self {
            Clause::Equals { field, .. }
            | Clause::In { field, .. }
            | Clause::AtLeast { field, .. }
            | Clause::Present { field } => field,
        }
    }

    pub fn holds(&self, facts: &Facts<'_>) -> bool {
        let current: Option<&str> = match self.field() {
            Field::Attribute(key) => facts.record.attribute(key).map(|a| a.value.as_str()),
            Field::DominantEmotion => facts.dominant.map(Emotion::name),
            Field::InteractionCount => {
                return match self {
                    Clause::AtLeast { value, .. } => facts.record.interaction_count() >= *value,
                    Clause::Present { .. } => true,
                    _ => false,
                }
            }
        };
        match (self, current) {
            (_, None) => false,
            (Clause::Equals { value, .. }, Some(v)) => v.eq_ignore_ascii_case(value),
            (Clause::In { values, .. }, Some(v)) => values.iter().any(|x| v.eq_ignore_ascii_case(x)),
            (Clause::Present { .. }, Some(_)) => true,
            (Clause::AtLeast { .. }, Some(_)) => false,
        }
    }

    fn validate(&self, schema: &AttributeSchema) -> Result<(), String> {
        match self.field() {
            Field::Attribute(key) if !schema.contains(key) => {
                return Err(format!("unknown attribute key `{key}`"));
            }
            Field::InteractionCount if !matches!(self, Clause::AtLeast { .. } | Clause::Present { .. }) => {
                return Err("interaction_count only supports `at_least`".into());
            }
            Field::Attribute(_) | Field::DominantEmotion if matches!(self, Clause::AtLeast { .. }) => {
                return Err(format!("`at_least` is not supported on `{}`", self.field()));
            }
            Field::DominantEmotion => {
                let values: &[String] = match self {
                    Clause::Equals { value, .. } => std::slice::from_ref(value),
                    Clause::In { values, .. } => values,
                    _ => &[],
                };
                if let Some(bad) = values.iter().find(|v| v.parse::<Emotion>().is_err()) {
                    return Err(format!("`{bad}` is not an emotion"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl Rule {
    pub fn matches(&self, facts: &Facts<'_>) -> bool {
        self.condition.iter().all(|c| c.holds(facts))
    }
}

/// An ordered, validated rule list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, schema: &AttributeSchema) -> Result<Self, ConfigError> {
        let mut ids = HashSet::new();
        for rule in &rules {
            let fail = |reason: String| ConfigError::Rule { rule_id: rule.rule_id.clone(), reason };
            if rule.rule_id.is_empty() {
                return Err(fail("empty rule_id".into()));
            }
            if !ids.insert(rule.rule_id.as_str()) {
                return Err(fail("duplicate rule_id".into()));
            }
            for clause in &rule.condition {
                clause.validate(schema).map_err(fail)?;
            }
        }
        Ok(Self { rules })
    }

    /// Parses a rules document. Malformed entries are reported with their
    /// `rule_id` when one can be read.
    pub fn from_json(json: &str, schema: &AttributeSchema) -> Result<Self, ConfigError> {
        let raw: Vec<serde_json::Value> = serde_json::from_str(json)?;
        let mut rules = Vec::with_capacity(raw.len());
        for (i, value) in raw.into_iter().enumerate() {
            let rule_id =
                value.get("rule_id").and_then(|v| v.as_str()).map_or_else(|| format!("#{i}"), str::to_string);
            let rule = serde_json::from_value(value)
                .map_err(|e| ConfigError::Rule { rule_id, reason: e.to_string() })?;
            rules.push(rule);
        }
        Self::new(rules, schema)
    }

    pub fn load(path: &Path, schema: &AttributeSchema) -> Result<Self, ConfigError> {
        Self::from_json(&crate::read_config(path)?, schema)
    }

    /// The three shipped rules: young visitors get an informal, playful
    /// robot; older ones a formal, serious one; the face mirrors the
    /// dominant emotion.
    pub fn default_for(schema: &AttributeSchema) -> Result<Self, ConfigError> {
        Self::from_json(DEFAULT_RULES, schema)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rules).expect("rules always serialize")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn evaluate(&self, record: &UserRecord, dominant: Option<Emotion>) -> Directive {
        evaluate(record, dominant, &self.rules)
    }
}

pub fn evaluate(record: &UserRecord, dominant: Option<Emotion>, rules: &[Rule]) -> Directive {
    let facts = Facts { record, dominant };
    let defaults = Directive::default();
    let mut register = None;
    let mut tone = None;
    let mut expression = None;
    // One pass; every field keeps its first applicable override.
    for rule in rules.iter().filter(|r| r.matches(&facts)) {
        let o = &rule.overrides;
        register = register.or(o.register);
        tone = tone.or(o.tone);
        if expression.is_none() {
            expression = match o.expression {
                Some(ExpressionOverride::Fixed(e)) => Some(e),
                Some(ExpressionOverride::Mirror) => dominant.map(Expression::Emotion),
                None => None,
            };
        }
        if register.is_some() && tone.is_some() && expression.is_some() {
            break;
        }
    }
    Directive {
        register: register.unwrap_or(defaults.register),
        tone: tone.unwrap_or(defaults.tone),
        expression: expression.unwrap_or(defaults.expression),
    }
}

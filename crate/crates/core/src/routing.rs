//! Target-language family groups and routing of requests to per-group models.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Direction, LanguageTag};

pub type GroupId = u8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("language {0} belongs to no group")]
    Ungrouped(LanguageTag),
    #[error("language {0} belongs to several groups and has no inference override")]
    Ambiguous(LanguageTag),
    #[error("override for {lang} points at group {group}, which does not contain it")]
    BadOverride { lang: LanguageTag, group: GroupId },
    #[error("no model registered for group {0}")]
    MissingModel(GroupId),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
}

/// Group membership plus the languages that route to a single group at
/// inference despite training in several.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTable {
    pub groups: BTreeMap<GroupId, BTreeSet<LanguageTag>>,
    #[serde(default)]
    pub inference_overrides: BTreeMap<LanguageTag, GroupId>,
}

const BUILTIN: [(GroupId, &str); 5] = [
    (1, "eng fra"),
    (2, "afr nso sna ssw tsn tso xho zul"),
    (3, "amh luo orm som swh wol"),
    (4, "fuv hau ibo yor"),
    (5, "kam kin lin lug nya swh umb"),
];

fn lang_set(codes: &str) -> BTreeSet<LanguageTag> {
    codes
        .split_whitespace()
        .map(|c| c.parse().expect("built-in code"))
        .collect()
}

impl Default for GroupTable {
    fn default() -> Self {
        let groups: BTreeMap<GroupId, BTreeSet<LanguageTag>> =
            BUILTIN.iter().map(|(g, codes)| (*g, lang_set(codes))).collect();
        // swh trains with both of its groups but is served by the model of
        // the Horn-of-Africa group, identified by membership.
        let horn = lang_set("amh luo orm som swh wol");
        let swh: LanguageTag = "swh".parse().expect("built-in code");
        let target = groups
            .iter()
            .find(|(_, members)| **members == horn)
            .map(|(g, _)| *g)
            .expect("built-in table has the Horn-of-Africa group");
        GroupTable {
            groups,
            inference_overrides: BTreeMap::from([(swh, target)]),
        }
    }
}

impl GroupTable {
    pub fn from_json(text: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let table: GroupTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    /// Every language is grouped; multi-group languages have a valid override.
    pub fn validate(&self) -> Result<(), RoutingError> {
        for lang in LanguageTag::all() {
            self.inference_group(lang)?;
        }
        Ok(())
    }

    pub fn groups_of(&self, lang: LanguageTag) -> Result<BTreeSet<GroupId>, RoutingError> {
        let found: BTreeSet<GroupId> = self
            .groups
            .iter()
            .filter(|(_, m)| m.contains(&lang))
            .map(|(g, _)| *g)
            .collect();
        if found.is_empty() {
            return Err(RoutingError::Ungrouped(lang));
        }
        Ok(found)
    }

    pub fn groups_of_code(&self, code: &str) -> Result<BTreeSet<GroupId>, RoutingError> {
        let lang = code
            .parse()
            .map_err(|_| RoutingError::UnknownLanguage(code.to_string()))?;
        self.groups_of(lang)
    }

    /// The single group whose model serves requests into `target`.
    pub fn inference_group(&self, target: LanguageTag) -> Result<GroupId, RoutingError> {
        let groups = self.groups_of(target)?;
        if let Some(&g) = self.inference_overrides.get(&target) {
            if !groups.contains(&g) {
                return Err(RoutingError::BadOverride { lang: target, group: g });
            }
            return Ok(g);
        }
        match groups.len() {
            1 => Ok(*groups.iter().next().expect("non-empty")),
            _ => Err(RoutingError::Ambiguous(target)),
        }
    }

    /// Assigns each direction to every group containing its target.
    pub fn plan_training_groups(
        &self,
        directions: &[Direction],
    ) -> Result<BTreeMap<GroupId, Vec<Direction>>, RoutingError> {
        let mut plan: BTreeMap<GroupId, Vec<Direction>> = BTreeMap::new();
        for d in directions {
            for g in self.groups_of(d.tgt)? {
                plan.entry(g).or_default().push(*d);
            }
        }
        Ok(plan)
    }
}

/// Model identifiers (typically paths) per group.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRegistry {
    pub entries: BTreeMap<GroupId, String>,
}

impl ModelRegistry {
    pub fn is_complete(&self, table: &GroupTable) -> bool {
        table.groups.keys().all(|g| self.entries.contains_key(g))
    }
}

pub fn route<'r>(
    table: &GroupTable,
    target: LanguageTag,
    registry: &'r ModelRegistry,
) -> Result<&'r str, RoutingError> {
    let g = table.inference_group(target)?;
    registry
        .entries
        .get(&g)
        .map(String::as_str)
        .ok_or(RoutingError::MissingModel(g))
}

//! Patient profiles and profile-specific discretization of numeric features.
//!
//! A profile is one (age tag, gender tag, condition tag) combination. Each
//! numeric feature has one crisp normal range per profile; values below the
//! range are `Low`, above it `High`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::dataset::{RawDataset, RawRecord, Schema, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProfileId(pub String);

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProfileId {
    fn from(s: &str) -> Self {
        ProfileId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgeTag {
    pub name: String,
    /// Inclusive upper bound per gender tag; `None` only for the last tag.
    pub upper: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenderTag {
    pub name: String,
    /// Label of the gender feature that selects this tag.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub id: ProfileId,
    pub age: String,
    pub gender: String,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSchema {
    pub age_feature: String,
    pub gender_feature: String,
    /// Required when there is more than one condition tag.
    pub condition_feature: Option<String>,
    pub age_tags: Vec<AgeTag>,
    pub gender_tags: Vec<GenderTag>,
    pub condition_tags: Vec<String>,
    pub profiles: Vec<Profile>,
}

pub fn num_profiles(schema: &ProfileSchema) -> usize {
    schema.age_tags.len() * schema.gender_tags.len() * schema.condition_tags.len()
}

impl ProfileSchema {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.age_tags.is_empty() || self.gender_tags.is_empty() || self.condition_tags.is_empty() {
            return cfg("profiles need at least one age, gender and condition tag".into());
        }
        unique(self.age_tags.iter().map(|t| t.name.as_str()), "age tag")?;
        unique(self.gender_tags.iter().map(|t| t.name.as_str()), "gender tag")?;
        unique(self.condition_tags.iter().map(String::as_str), "condition tag")?;
        if self.condition_tags.len() > 1 && self.condition_feature.is_none() {
            return cfg("several condition tags need a condition_feature".into());
        }

        let last = self.age_tags.len() - 1;
        for g in &self.gender_tags {
            let mut prev = f64::NEG_INFINITY;
            for (i, tag) in self.age_tags.iter().enumerate() {
                match (&tag.upper, i == last) {
                    (None, true) => {}
                    (None, false) => {
                        return cfg(format!("age tag {:?} needs an upper bound", tag.name))
                    }
                    (Some(_), true) => {
                        return cfg(format!(
                            "last age tag {:?} must not have an upper bound",
                            tag.name
                        ))
                    }
                    (Some(bounds), false) => {
                        let Some(&b) = bounds.get(&g.name) else {
                            return cfg(format!(
                                "age tag {:?} has no bound for gender {:?}",
                                tag.name, g.name
                            ));
                        };
                        if !b.is_finite() || b <= prev {
                            return cfg(format!(
                                "age bounds for gender {:?} must be finite and strictly increasing",
                                g.name
                            ));
                        }
                        prev = b;
                    }
                }
            }
        }
        for tag in &self.age_tags {
            if let Some(bounds) = &tag.upper {
                if let Some(k) = bounds.keys().find(|k| !self.gender_tags.iter().any(|g| &g.name == *k)) {
                    return cfg(format!("age tag {:?} bounds unknown gender {k:?}", tag.name));
                }
            }
        }

        unique(self.profiles.iter().map(|p| p.id.0.as_str()), "profile id")?;
        let mut combos = HashSet::new();
        for p in &self.profiles {
            if !self.age_tags.iter().any(|t| t.name == p.age)
                || !self.gender_tags.iter().any(|t| t.name == p.gender)
                || !self.condition_tags.contains(&p.condition)
            {
                return cfg(format!("profile {} uses an undeclared tag", p.id));
            }
            if !combos.insert((&p.age, &p.gender, &p.condition)) {
                return cfg(format!("profile {} repeats a tag combination", p.id));
            }
        }
        if self.profiles.len() != num_profiles(self) {
            return cfg(format!(
                "expected {} profiles (one per tag combination), found {}",
                num_profiles(self),
                self.profiles.len()
            ));
        }
        Ok(())
    }

    pub fn profile(&self, id: &ProfileId) -> Option<&Profile> {
        self.profiles.iter().find(|p| &p.id == id)
    }

    /// Profile for an (age, gender label, condition label) triple.
    pub fn assign(&self, age: f64, gender: &str, condition: Option<&str>) -> Result<ProfileId> {
        let gender_tag = self
            .gender_tags
            .iter()
            .find(|g| g.value.eq_ignore_ascii_case(gender))
            .ok_or_else(|| Error::Data(format!("unknown gender {gender:?}")))?;
        let age_tag = self
            .age_tags
            .iter()
            .find(|t| match &t.upper {
                Some(b) => age <= b[&gender_tag.name],
                None => true,
            })
            .expect("last age tag is unbounded");
        let condition_tag = match (condition, self.condition_tags.len()) {
            (_, 1) => self.condition_tags[0].as_str(),
            (Some(c), _) => self
                .condition_tags
                .iter()
                .find(|t| t.eq_ignore_ascii_case(c))
                .map(String::as_str)
                .unwrap_or(c),
            (None, _) => return Err(Error::Data("record has no medical condition".into())),
        };
        self.profiles
            .iter()
            .find(|p| p.age == age_tag.name && p.gender == gender_tag.name && p.condition == condition_tag)
            .map(|p| p.id.clone())
            .ok_or_else(|| Error::NoProfile {
                age: age_tag.name.clone(),
                gender: gender_tag.name.clone(),
                condition: condition_tag.to_string(),
            })
    }
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Config(format!("duplicate {what} {n:?}")));
        }
    }
    Ok(())
}

pub fn assign_profile(
    record: &RawRecord,
    schema: &Schema,
    profiles: &ProfileSchema,
) -> Result<ProfileId> {
    let get = |name: &str| {
        schema
            .index_of(name)
            .map(|i| &record.values[i])
            .ok_or_else(|| Error::Config(format!("profile feature {name:?} is not in the schema")))
    };
    let age = get(&profiles.age_feature)?
        .as_number()
        .ok_or_else(|| Error::Config(format!("{:?} must be numeric", profiles.age_feature)))?;
    let gender = get(&profiles.gender_feature)?
        .as_label()
        .ok_or_else(|| Error::Config(format!("{:?} must be categorical", profiles.gender_feature)))?;
    let condition = match &profiles.condition_feature {
        Some(c) => Some(get(c)?.as_label().ok_or_else(|| {
            Error::Config(format!("{c:?} must be categorical"))
        })?),
        None => None,
    };
    profiles.assign(age, gender, condition)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Low,
    Normal,
    High,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "Low",
            Level::Normal => "Normal",
            Level::High => "High",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        [Level::Low, Level::Normal, Level::High]
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `age_coef * age + offset`; a constant cut has `age_coef == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutValue {
    pub age_coef: f64,
    pub offset: f64,
}

impl CutValue {
    pub fn constant(x: f64) -> Self {
        Self { age_coef: 0.0, offset: x }
    }

    pub fn affine(age_coef: f64, offset: f64) -> Self {
        Self { age_coef, offset }
    }

    pub fn is_constant(&self) -> bool {
        self.age_coef == 0.0
    }

    pub fn at(&self, age: f64) -> f64 {
        if self.is_constant() {
            self.offset
        } else {
            self.age_coef * age + self.offset
        }
    }
}

/// A cut point; `inclusive` moves the cut value itself into the outer band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub value: CutValue,
    pub inclusive: bool,
}

impl Cut {
    pub fn open(x: f64) -> Self {
        Self {
            value: CutValue::constant(x),
            inclusive: false,
        }
    }

    pub fn closed(x: f64) -> Self {
        Self {
            value: CutValue::constant(x),
            inclusive: true,
        }
    }
}

/// Low iff `v < low` (`<=` when inclusive); High iff `v > high` (`>=`
/// when inclusive); Normal otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub low: Option<Cut>,
    pub high: Option<Cut>,
}

impl RangeSpec {
    pub fn classify(&self, value: f64, age: f64) -> Level {
        if let Some(c) = self.low {
            let x = c.value.at(age);
            if value < x || (c.inclusive && value == x) {
                return Level::Low;
            }
        }
        if let Some(c) = self.high {
            let x = c.value.at(age);
            if value > x || (c.inclusive && value == x) {
                return Level::High;
            }
        }
        Level::Normal
    }

    pub fn produces(&self, level: Level) -> bool {
        match level {
            Level::Low => self.low.is_some(),
            Level::Normal => true,
            Level::High => self.high.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalRangeTable {
    pub entries: BTreeMap<(String, ProfileId), RangeSpec>,
}

impl NormalRangeTable {
    pub fn insert(&mut self, feature: &str, profile: ProfileId, spec: RangeSpec) -> Result<()> {
        let key = (feature.to_string(), profile);
        if self.entries.contains_key(&key) {
            return Err(Error::Config(format!(
                "duplicate range for {feature:?} under {}",
                key.1
            )));
        }
        self.entries.insert(key, spec);
        Ok(())
    }

    pub fn get(&self, feature: &str, profile: &ProfileId) -> Option<&RangeSpec> {
        self.entries.get(&(feature.to_string(), profile.clone()))
    }

    /// Every numeric input of `schema` has one spec per profile and no
    /// spec names an unknown feature or profile.
    pub fn validate(&self, schema: &Schema, profiles: &ProfileSchema) -> Result<()> {
        for ((feature, profile), spec) in &self.entries {
            match schema.feature(feature) {
                Some(f) if f.is_numeric() => {}
                Some(_) => {
                    return Err(Error::Config(format!(
                        "range given for non-numeric feature {feature:?}"
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "range given for unknown feature {feature:?}"
                    )))
                }
            }
            if profiles.profile(profile).is_none() {
                return Err(Error::Config(format!(
                    "range for {feature:?} names unknown profile {profile}"
                )));
            }
            for cut in [spec.low, spec.high].into_iter().flatten() {
                if !cut.value.age_coef.is_finite() || !cut.value.offset.is_finite() {
                    return Err(Error::Config(format!("non-finite cut for {feature:?}")));
                }
            }
            if let (Some(lo), Some(hi)) = (spec.low, spec.high) {
                if lo.value.is_constant() && hi.value.is_constant() && lo.value.offset >= hi.value.offset {
                    return Err(Error::Config(format!(
                        "range for {feature:?} under {profile}: low cut must be below high cut"
                    )));
                }
            }
        }
        for (_, f) in schema.inputs().filter(|(_, f)| f.is_numeric()) {
            for p in &profiles.profiles {
                if self.get(&f.name, &p.id).is_none() {
                    return Err(Error::MissingRange {
                        feature: f.name.clone(),
                        profile: p.id.0.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn discretize_value(
    feature: &str,
    value: f64,
    age: f64,
    profile: &ProfileId,
    table: &NormalRangeTable,
) -> Result<Level> {
    let spec = table.get(feature, profile).ok_or_else(|| Error::MissingRange {
        feature: feature.to_string(),
        profile: profile.0.clone(),
    })?;
    if !value.is_finite() {
        return Err(Error::Data(format!("non-finite value for {feature:?}")));
    }
    Ok(spec.classify(value, age))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiscreteValue {
    Level(Level),
    Label(String),
}

/// `values[i]` belongs to `schema.features[i]`: a level for numeric inputs,
/// the original label otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretizedRecord {
    pub profile: ProfileId,
    pub values: Vec<DiscreteValue>,
}

pub fn discretize_record(
    record: &RawRecord,
    schema: &Schema,
    profiles: &ProfileSchema,
    table: &NormalRangeTable,
) -> Result<DiscretizedRecord> {
    let profile = assign_profile(record, schema, profiles)?;
    let age = record.values[schema
        .index_of(&profiles.age_feature)
        .expect("checked by assign_profile")]
    .as_number()
    .expect("checked by assign_profile");
    let values = schema
        .features
        .iter()
        .zip(&record.values)
        .map(|(f, v)| match v {
            Value::Number(x) if f.role == crate::dataset::Role::Input => {
                discretize_value(&f.name, *x, age, &profile, table).map(DiscreteValue::Level)
            }
            Value::Number(x) => Err(Error::Data(format!(
                "target {:?} is numeric ({x})",
                f.name
            ))),
            Value::Label(l) => Ok(DiscreteValue::Label(l.clone())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscretizedRecord { profile, values })
}

pub fn discretize_dataset(
    data: &RawDataset,
    profiles: &ProfileSchema,
    table: &NormalRangeTable,
) -> Result<Vec<DiscretizedRecord>> {
    data.records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            discretize_record(r, &data.schema, profiles, table)
                .map_err(|e| Error::Data(format!("record {}: {e}", i + 1)))
        })
        .collect()
}

//! The dataset config file: feature schema, profiles and normal ranges in
//! one TOML document. See `config/zalizadeh.profiles` for a complete
//! example.
//!
//! ```toml
//! [dataset]
//! ignore_columns = ["BMI"]
//!
//! [[feature]]
//! name = "HB"
//! kind = "numeric"
//!
//! [[feature]]
//! name = "DM"
//! kind = "binominal"
//! values = ["No", "yes"]
//! aliases = { "0" = "No", "1" = "yes" }
//!
//! [profiles]
//! age_feature = "Age"
//! gender_feature = "Gender"
//! gender_tags = [{ name = "male", value = "Male" }, { name = "female", value = "Female" }]
//! condition_tags = ["normal"]
//! age_tags = [{ name = "normal", upper = { male = 45, female = 55 } }, { name = "high" }]
//! profile = [{ id = "p1", age = "normal", gender = "male", condition = "normal" }]
//!
//! [[range]]
//! feature = "HB"
//! profiles = ["p1", "p3"]
//! low = 13.5
//! high = 17.5
//! ```
//!
//! A cut is either a number or an affine formula in the record's age,
//! `{ age = 0.5, offset = 5 }`. `low_inclusive = true` makes the low cut
//! value itself Low; `high_inclusive` does the same for High.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::dataset::{default_presence, FeatureKind, FeatureSchema, Role, Schema};
use crate::error::{Error, Result};
use crate::profiling::{
    AgeTag, Cut, CutValue, GenderTag, NormalRangeTable, Profile, ProfileId, ProfileSchema,
    RangeSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub schema: Schema,
    pub profiles: ProfileSchema,
    pub ranges: NormalRangeTable,
}

impl DatasetConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

impl std::str::FromStr for DatasetConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        raw.build()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    dataset: RawDataset,
    feature: Vec<RawFeature>,
    profiles: RawProfiles,
    #[serde(default)]
    range: Vec<RawRange>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    #[serde(default)]
    ignore_columns: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    name: String,
    kind: FeatureKind,
    #[serde(default)]
    unit: Option<String>,
    #[serde(default)]
    values: Vec<String>,
    #[serde(default)]
    role: Role,
    #[serde(default)]
    column: Option<String>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    #[serde(default)]
    presence: Option<Vec<String>>,
    #[serde(default)]
    one_hot: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    age_feature: String,
    gender_feature: String,
    #[serde(default)]
    condition_feature: Option<String>,
    gender_tags: Vec<RawGenderTag>,
    condition_tags: Vec<String>,
    age_tags: Vec<RawAgeTag>,
    profile: Vec<RawProfile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenderTag {
    name: String,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgeTag {
    name: String,
    #[serde(default)]
    upper: Option<BTreeMap<String, f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    id: String,
    age: String,
    gender: String,
    condition: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    feature: String,
    profiles: Vec<String>,
    #[serde(default)]
    low: Option<RawCut>,
    #[serde(default)]
    low_inclusive: bool,
    #[serde(default)]
    high: Option<RawCut>,
    #[serde(default)]
    high_inclusive: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCut {
    Constant(f64),
    Affine {
        age: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl From<RawCut> for CutValue {
    fn from(c: RawCut) -> Self {
        match c {
            RawCut::Constant(x) => CutValue::constant(x),
            RawCut::Affine { age, offset } => CutValue::affine(age, offset),
        }
    }
}

impl RawConfig {
    fn build(self) -> Result<DatasetConfig> {
        let features = self
            .feature
            .into_iter()
            .map(|f| {
                if f.one_hot && f.kind == FeatureKind::Numeric {
                    return Err(Error::Config(format!(
                        "numeric feature {:?} cannot be one_hot",
                        f.name
                    )));
                }
                let presence = f.presence.unwrap_or_else(|| default_presence(&f.values));
                Ok(FeatureSchema {
                    name: f.name,
                    kind: f.kind,
                    unit: f.unit,
                    allowed_values: f.values,
                    role: f.role,
                    column: f.column,
                    aliases: f.aliases,
                    presence,
                    one_hot: f.one_hot,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let schema = Schema {
            features,
            ignore_columns: self.dataset.ignore_columns,
        };
        schema.validate()?;

        let p = self.profiles;
        let profiles = ProfileSchema {
            age_feature: p.age_feature,
            gender_feature: p.gender_feature,
            condition_feature: p.condition_feature,
            age_tags: p
                .age_tags
                .into_iter()
                .map(|t| AgeTag { name: t.name, upper: t.upper })
                .collect(),
            gender_tags: p
                .gender_tags
                .into_iter()
                .map(|t| GenderTag { name: t.name, value: t.value })
                .collect(),
            condition_tags: p.condition_tags,
            profiles: p
                .profile
                .into_iter()
                .map(|r| Profile {
                    id: ProfileId(r.id),
                    age: r.age,
                    gender: r.gender,
                    condition: r.condition,
                })
                .collect(),
        };
        profiles.validate()?;
        check_profile_features(&schema, &profiles)?;

        let mut ranges = NormalRangeTable::default();
        for r in self.range {
            let spec = RangeSpec {
                low: r.low.map(|c| Cut { value: c.into(), inclusive: r.low_inclusive }),
                high: r.high.map(|c| Cut { value: c.into(), inclusive: r.high_inclusive }),
            };
            if r.profiles.is_empty() {
                return Err(Error::Config(format!("range for {:?} lists no profiles", r.feature)));
            }
            for pid in r.profiles {
                ranges.insert(&r.feature, ProfileId(pid), spec)?;
            }
        }
        ranges.validate(&schema, &profiles)?;

        Ok(DatasetConfig { schema, profiles, ranges })
    }
}

fn check_profile_features(schema: &Schema, profiles: &ProfileSchema) -> Result<()> {
    let age = schema
        .feature(&profiles.age_feature)
        .ok_or_else(|| Error::Config(format!("age feature {:?} not declared", profiles.age_feature)))?;
    if !age.is_numeric() {
        return Err(Error::Config("age feature must be numeric".into()));
    }
    let gender = schema.feature(&profiles.gender_feature).ok_or_else(|| {
        Error::Config(format!("gender feature {:?} not declared", profiles.gender_feature))
    })?;
    for g in &profiles.gender_tags {
        if gender.canonical_label(&g.value).is_none() {
            return Err(Error::Config(format!(
                "gender tag {:?} maps to {:?}, which {:?} does not allow",
                g.name, g.value, gender.name
            )));
        }
    }
    if let Some(c) = &profiles.condition_feature {
        match schema.feature(c) {
            Some(f) if !f.is_numeric() => {}
            _ => return Err(Error::Config(format!("condition feature {c:?} must be a declared categorical"))),
        }
    }
    Ok(())
}

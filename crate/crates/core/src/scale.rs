//! The AI intelligence scale: weighted sub-tests grouped into ability
//! categories.
//!
//! Weights are whole percentages so that "all weights sum to one" is an
//! integer equality (`Σ = 100`) rather than a floating-point comparison.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::modality::Modality;

/// Exact weight, stored as an integer percentage.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Weight(u32);

impl Weight {
    pub const ONE: Weight = Weight(100);

    pub const fn percent(p: u32) -> Self {
        Weight(p)
    }

    pub fn as_percent(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl core::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        Weight(iter.map(|w| w.0).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Acquire,
    Master,
    Innovate,
    Feedback,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Acquire => "acquire",
            Category::Master => "master",
            Category::Innovate => "innovate",
            Category::Feedback => "feedback",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbilityCategory {
    pub name: Category,
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTest {
    pub id: String,
    pub label: String,
    pub category: Category,
    pub weight: Weight,
    /// Input modality of this sub-test's questions.
    pub expected_modality: Modality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelligenceScale {
    pub id: String,
    pub subtests: Vec<SubTest>,
    pub categories: Vec<AbilityCategory>,
}

/// One broken scale invariant.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScaleViolation {
    #[error("weights sum to {0}")]
    WeightSum(Weight),
    #[error("category weights sum to {0}")]
    CategoryWeightSum(Weight),
    #[error("category {category} has weight {declared} but its sub-tests sum to {actual}")]
    CategoryMismatch {
        category: Category,
        declared: Weight,
        actual: Weight,
    },
    #[error("duplicate id {0}")]
    DuplicateSubTest(String),
    #[error("duplicate category {0}")]
    DuplicateCategory(Category),
    #[error("category {0} has no sub-tests")]
    EmptyCategory(Category),
    #[error("sub-test {0} belongs to undeclared category {1}")]
    UndeclaredCategory(String, Category),
    #[error("sub-test {0} has zero weight")]
    ZeroWeight(String),
}

pub const DEFAULT_SCALE_ID: &str = "ai-iq-15";

const DEFAULT_SUBTESTS: [(&str, &str, Category, u32, Modality); 15] = [
    (
        "acquire_words",
        "Ability to identify words",
        Category::Acquire,
        3,
        Modality::Text,
    ),
    (
        "acquire_sound",
        "Ability to identify sound",
        Category::Acquire,
        3,
        Modality::Sound,
    ),
    (
        "acquire_image",
        "Ability to identify image",
        Category::Acquire,
        4,
        Modality::Image,
    ),
    (
        "master_general_knowledge",
        "Ability to master general knowledge",
        Category::Master,
        6,
        Modality::Text,
    ),
    (
        "master_translation",
        "Ability to master translation ability",
        Category::Master,
        3,
        Modality::Text,
    ),
    (
        "master_calculation",
        "Ability to master calculation",
        Category::Master,
        6,
        Modality::Text,
    ),
    (
        "innovate_arrangement",
        "Ability to master arrangement",
        Category::Innovate,
        5,
        Modality::Text,
    ),
    (
        "innovate_association",
        "Ability to master association",
        Category::Innovate,
        12,
        Modality::Text,
    ),
    (
        "innovate_creation",
        "Ability to master creation",
        Category::Innovate,
        12,
        Modality::Text,
    ),
    (
        "innovate_speculation",
        "Ability to master speculation",
        Category::Innovate,
        12,
        Modality::Text,
    ),
    (
        "innovate_selection",
        "Ability to master selection",
        Category::Innovate,
        12,
        Modality::Text,
    ),
    (
        "innovate_finding_laws",
        "Ability to master finding (laws)",
        Category::Innovate,
        12,
        Modality::Text,
    ),
    (
        "feedback_word",
        "Word feedback ability",
        Category::Feedback,
        3,
        Modality::Text,
    ),
    (
        "feedback_sound",
        "Sound feedback ability",
        Category::Feedback,
        3,
        Modality::Text,
    ),
    (
        "feedback_image",
        "Image feedback ability",
        Category::Feedback,
        4,
        Modality::Text,
    ),
];

const DEFAULT_CATEGORIES: [(Category, u32); 4] = [
    (Category::Acquire, 10),
    (Category::Master, 15),
    (Category::Innovate, 65),
    (Category::Feedback, 10),
];

impl IntelligenceScale {
    /// The published 15 sub-test scale.
    pub fn default_scale() -> Self {
        IntelligenceScale {
            id: DEFAULT_SCALE_ID.to_string(),
            subtests: DEFAULT_SUBTESTS
                .iter()
                .map(|&(id, label, category, weight, modality)| SubTest {
                    id: id.to_string(),
                    label: label.to_string(),
                    category,
                    weight: Weight::percent(weight),
                    expected_modality: modality,
                })
                .collect(),
            categories: DEFAULT_CATEGORIES
                .iter()
                .map(|&(name, w)| AbilityCategory {
                    name,
                    weight: Weight::percent(w),
                })
                .collect(),
        }
    }

    pub fn subtest(&self, id: &str) -> Option<&SubTest> {
        self.subtests.iter().find(|s| s.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.subtests.iter().position(|s| s.id == id)
    }

    pub fn category_weight(&self, category: Category) -> Weight {
        self.subtests
            .iter()
            .filter(|s| s.category == category)
            .map(|s| s.weight)
            .sum()
    }

    /// Returns every broken invariant; an empty list means the scale is valid.
    pub fn validate(&self) -> Result<(), Vec<ScaleViolation>> {
        let mut violations = Vec::new();

        let mut seen = BTreeSet::new();
        for s in &self.subtests {
            if !seen.insert(s.id.as_str()) {
                violations.push(ScaleViolation::DuplicateSubTest(s.id.clone()));
            }
            if s.weight.as_percent() == 0 {
                violations.push(ScaleViolation::ZeroWeight(s.id.clone()));
            }
        }

        let total: Weight = self.subtests.iter().map(|s| s.weight).sum();
        if total != Weight::ONE {
            violations.push(ScaleViolation::WeightSum(total));
        }

        let mut declared = BTreeMap::new();
        for c in &self.categories {
            if declared.insert(c.name, c.weight).is_some() {
                violations.push(ScaleViolation::DuplicateCategory(c.name));
            }
        }
        let category_total: Weight = self.categories.iter().map(|c| c.weight).sum();
        if category_total != Weight::ONE {
            violations.push(ScaleViolation::CategoryWeightSum(category_total));
        }
        for s in &self.subtests {
            if !declared.contains_key(&s.category) {
                violations.push(ScaleViolation::UndeclaredCategory(s.id.clone(), s.category));
            }
        }
        for (&category, &weight) in &declared {
            if !self.subtests.iter().any(|s| s.category == category) {
                violations.push(ScaleViolation::EmptyCategory(category));
                continue;
            }
            let actual = self.category_weight(category);
            if actual != weight {
                violations.push(ScaleViolation::CategoryMismatch {
                    category,
                    declared: weight,
                    actual,
                });
            }
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }
}

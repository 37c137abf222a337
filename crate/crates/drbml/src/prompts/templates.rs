//! Prompt template catalog.
//!
//! The built-in templates are fixed text; golden copies live under
//! `tests/golden/`. A few original typos ("paird", "with in") are kept
//! verbatim in the defaults, with [`TemplateCatalog::normalized`] offering
//! corrected variants. Catalogs can also be loaded from a directory of
//! `.txt` files to swap prompt wording without rebuilding.

use std::fs;
use std::path::Path;

use super::PromptError;

/// Placeholder replaced by an entry's trimmed code during rendering.
pub const CODE_SLOT: &str = "{Code_to_analyze}";

pub(super) const BP1: &str = "You are an expert in High-Performance Computing. Examine the code presented to you and ascertain if it contains any data races.\nBegin with a concise response: either 'yes' for the presence of a data race or 'no' if absent.\n\n{Code_to_analyze}";

pub(super) const BP2: &str = "You are an expert in High-Performance Computing. Examine the code presented to you and ascertain if it contains any data races.\nBegin with a concise response: either 'yes' for the presence of a data race or 'no' if absent.\ndetail each occurrence of a data race by specifying the variable pairs involved, using the JSON format outlined below:\n{\n\"name\": Names of each pair of variables involved in a data race.\n\"line\": line numbers of the paired variables within the code.\n\"col\": column number of the paird variables with in their line.\n\"operation_types\": Corresponding operations, 'W' for write operation and 'R' for read operation.\n}\n\n{Code_to_analyze}";

pub(super) const AP1: &str = "You are an expert in High-Performance Computing (HPC). Examine the provided code to identify any data races based on data dependence analysis.\nFor clarity, a data race occurs when two or more threads access the same memory location simultaneously in a conflicting manner, without sufficient synchronization, with at least one of these accesses involving a write operation. It's crucial to analyze data dependence before determining potential data races.\nBegin with a concise response: either 'yes' for the presence of a data race or 'no' if absent.\n\n{Code_to_analyze}";

pub(super) const AP2_CHAIN1: &str = "You are an expert in High-Performance Computing (HPC). Analyze data dependence in the given code.\n\n{Code_to_analyze}";

pub(super) const AP2_CHAIN2: &str = "A data race occurs when two or more threads access the same memory location simultaneously in a conflicting manner, without sufficient synchronization, with at least one of these accesses involving a write operation. Identify any data races based on the given data dependence information.\nBegin with a concise response: either 'yes' for the presence of a data race or 'no' if absent.";

pub(super) const BASIC_FT: &str = "You are an expert in High-Performance Computing. Examine the code presented to you and ascertain if it contains any data races.\nBegin with a concise response: either \"yes\" for the presence of a data race or \"no\" if absent.\n\n{Code_to_analyze}";

pub(super) const ADVANCED_FT: &str = "You are an expert in High-Performance Computing. Examine the code presented to you and ascertain if it contains any data races.\nDetail each occurrence of a data race by specifying the variable pairs involved using the JSON format outlined below:\n{\n\"variable_names\": Names of each pair of variables involved in a data race.\n\"variable_locations\": line numbers of the paired variables within the code.\n\"operation_types\": Corresponding operations, either 'write' or 'read'.\n}\n{Code_to_analyze}";

/// The set of prompt templates used for rendering.
#[derive(Debug, Clone)]
pub struct TemplateCatalog {
    pub(super) bp1: String,
    pub(super) bp2: String,
    pub(super) ap1: String,
    pub(super) ap2_chain1: String,
    pub(super) ap2_chain2: String,
    pub(super) basic_ft: String,
    pub(super) advanced_ft: String,
}

impl Default for TemplateCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateCatalog {
    /// The templates verbatim, original typos included.
    pub fn builtin() -> Self {
        Self {
            bp1: BP1.to_string(),
            bp2: BP2.to_string(),
            ap1: AP1.to_string(),
            ap2_chain1: AP2_CHAIN1.to_string(),
            ap2_chain2: AP2_CHAIN2.to_string(),
            basic_ft: BASIC_FT.to_string(),
            advanced_ft: ADVANCED_FT.to_string(),
        }
    }

    /// The built-in templates with spelling fixed.
    pub fn normalized() -> Self {
        let mut catalog = Self::builtin();
        catalog.bp2 = catalog
            .bp2
            .replace("\ndetail each", "\nDetail each")
            .replace("paird", "paired")
            .replace("with in", "within");
        catalog
    }

    /// Loads a catalog from a directory of template files.
    ///
    /// Expected files: `bp1.txt`, `bp2.txt`, `ap1.txt`, `ap2_chain1.txt`,
    /// `ap2_chain2.txt`, `basic_ft.txt`, `advanced_ft.txt`. One trailing
    /// newline per file is dropped.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| -> Result<String, PromptError> {
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(text.strip_suffix('\n').unwrap_or(&text).to_string())
        };
        let catalog = Self {
            bp1: read("bp1.txt")?,
            bp2: read("bp2.txt")?,
            ap1: read("ap1.txt")?,
            ap2_chain1: read("ap2_chain1.txt")?,
            ap2_chain2: read("ap2_chain2.txt")?,
            basic_ft: read("basic_ft.txt")?,
            advanced_ft: read("advanced_ft.txt")?,
        };
        catalog.check()?;
        Ok(catalog)
    }

    pub fn bp1(&self) -> &str {
        &self.bp1
    }

    pub fn bp2(&self) -> &str {
        &self.bp2
    }

    pub fn ap1(&self) -> &str {
        &self.ap1
    }

    pub fn ap2_chain1(&self) -> &str {
        &self.ap2_chain1
    }

    pub fn ap2_chain2(&self) -> &str {
        &self.ap2_chain2
    }

    pub fn basic_ft(&self) -> &str {
        &self.basic_ft
    }

    pub fn advanced_ft(&self) -> &str {
        &self.advanced_ft
    }

    fn check(&self) -> Result<(), PromptError> {
        let single_slot = [
            ("bp1", &self.bp1),
            ("bp2", &self.bp2),
            ("ap1", &self.ap1),
            ("ap2_chain1", &self.ap2_chain1),
            ("basic_ft", &self.basic_ft),
            ("advanced_ft", &self.advanced_ft),
        ];
        for (name, text) in single_slot {
            if text.matches(CODE_SLOT).count() != 1 {
                return Err(PromptError::BadTemplate {
                    name: name.to_string(),
                    reason: format!("must contain `{CODE_SLOT}` exactly once"),
                });
            }
        }
        if self.ap2_chain2.contains(CODE_SLOT) {
            return Err(PromptError::BadTemplate {
                name: "ap2_chain2".to_string(),
                reason: format!("must not contain `{CODE_SLOT}`"),
            });
        }
        Ok(())
    }
}

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    parent: Option<String>,
    label: String,
}

/// Occupation classification tree keyed by hierarchical code.
///
/// Every non-root code must extend its parent's code (e.g. `2311` under
/// `231`), so a code's first character names its 1-digit group.
#[derive(Debug, Clone, Default)]
pub struct Hierarchy {
    entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Deserialize)]
struct HierarchyRow {
    code: String,
    parent_code: String,
    label: String,
}

impl Hierarchy {
    /// Builds a hierarchy from `(code, parent, label)` triples; an empty
    /// parent marks a root.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (code, parent, label) in entries {
            let code: String = code.into();
            let parent: String = parent.into();
            if code.is_empty() {
                return Err(Error::invalid("hierarchy contains an empty code"));
            }
            let parent = (!parent.is_empty()).then_some(parent);
            if map
                .insert(
                    code.clone(),
                    Entry {
                        parent,
                        label: label.into(),
                    },
                )
                .is_some()
            {
                return Err(Error::invalid(format!("duplicate hierarchy code {code}")));
            }
        }
        let hierarchy = Hierarchy { entries: map };
        hierarchy.validate()?;
        Ok(hierarchy)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, row) in rdr.deserialize::<HierarchyRow>().enumerate() {
            let row = row.map_err(|e| Error::MalformedRow {
                source_name: "hierarchy".into(),
                line: i as u64 + 2,
                message: e.to_string(),
            })?;
            rows.push((row.code, row.parent_code, row.label));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("occupation hierarchy".into()));
        }
        Self::from_entries(rows)
    }

    fn validate(&self) -> Result<()> {
        for (code, entry) in &self.entries {
            if let Some(parent) = &entry.parent {
                if !self.entries.contains_key(parent) {
                    return Err(Error::invalid(format!(
                        "hierarchy code {code} has unknown parent {parent}"
                    )));
                }
                if !(code.len() > parent.len() && code.starts_with(parent.as_str())) {
                    return Err(Error::invalid(format!(
                        "hierarchy code {code} is not prefix-consistent with parent {parent}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, code: &str) -> bool {
        self.entries.contains_key(code)
    }

    pub fn parent(&self, code: &str) -> Option<&str> {
        self.entries.get(code)?.parent.as_deref()
    }

    pub fn label(&self, code: &str) -> Option<&str> {
        self.entries.get(code).map(|e| e.label.as_str())
    }

    /// Number of levels from the root down to `code` (roots have depth 1).
    pub fn depth(&self, code: &str) -> usize {
        let mut depth = 0;
        let mut cursor = Some(code);
        while let Some(c) = cursor {
            depth += 1;
            cursor = self.parent(c);
        }
        depth
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the `code,parent_code,label` CSV form.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["code", "parent_code", "label"])?;
        for (code, entry) in &self.entries {
            wtr.write_record([
                code.as_str(),
                entry.parent.as_deref().unwrap_or(""),
                entry.label.as_str(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Ordered list of region identifiers with display labels.
#[derive(Debug, Clone, Default)]
pub struct RegionManifest {
    regions: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct RegionRow {
    region_id: String,
    label: String,
}

impl RegionManifest {
    pub fn new<I, S>(regions: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        RegionManifest {
            regions: regions
                .into_iter()
                .map(|(id, label)| (id.into(), label.into()))
                .collect(),
        }
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut regions = BTreeMap::new();
        for (i, row) in rdr.deserialize::<RegionRow>().enumerate() {
            let row = row.map_err(|e| Error::MalformedRow {
                source_name: "regions".into(),
                line: i as u64 + 2,
                message: e.to_string(),
            })?;
            if row.region_id.is_empty() {
                return Err(Error::MalformedRow {
                    source_name: "regions".into(),
                    line: i as u64 + 2,
                    message: "empty region_id".into(),
                });
            }
            regions.insert(row.region_id, row.label);
        }
        if regions.is_empty() {
            return Err(Error::EmptyInput("region manifest".into()));
        }
        Ok(RegionManifest { regions })
    }

    pub fn contains(&self, region: &str) -> bool {
        self.regions.contains_key(region)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["region_id", "label"])?;
        for (id, label) in &self.regions {
            wtr.write_record([id, label])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

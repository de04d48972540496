//! Long-format choice data: ingestion, validation, indexing, and a minimal
//! case-format converter.
//!
//! A dataset is a list of rows, one per alternative. Rows sharing a group
//! id form one choice occasion (at least two alternatives, exactly one
//! chosen); occasions sharing an identifier belong to one decision maker,
//! who keeps a single coefficient set across all of their occasions.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampler::ModelSpec;

/// One alternative row.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceRow {
    /// Choice-occasion key.
    pub group_id: i64,
    /// Decision-maker key.
    pub person_id: i64,
    /// Whether this alternative was chosen.
    pub chosen: bool,
    /// Covariate values aligned with [`ChoiceDataset::variable_names`].
    pub covariates: Vec<f64>,
}

/// Validated long-format choice data, rows sorted by
/// `(person_id, group_id, original order)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDataset {
    pub variable_names: Vec<String>,
    pub rows: Vec<ChoiceRow>,
}

impl ChoiceDataset {
    /// Validate rows and build a dataset. Rows may arrive in any order;
    /// they are stably sorted by `(person_id, group_id)` so downstream
    /// structures depend only on the ids, not on file layout.
    pub fn from_rows(variable_names: Vec<String>, mut rows: Vec<ChoiceRow>) -> Result<Self> {
        let width = variable_names.len();
        for row in &rows {
            if row.covariates.len() != width {
                return Err(Error::InvalidArgument(format!(
                    "row in group {} has {} covariates, expected {width}",
                    row.group_id,
                    row.covariates.len()
                )));
            }
            if row.covariates.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite covariate in group {}",
                    row.group_id
                )));
            }
        }

        // A group must not span identifiers, wherever its rows sit.
        let mut group_person: HashMap<i64, i64> = HashMap::new();
        for row in &rows {
            match group_person.entry(row.group_id) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(row.person_id);
                }
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != row.person_id {
                        return Err(Error::GroupSpansIdentifiers(row.group_id));
                    }
                }
            }
        }

        rows.sort_by_key(|r| (r.person_id, r.group_id));

        let data = Self {
            variable_names,
            rows,
        };
        for occ in data.occasion_ranges() {
            let rows = &data.rows[occ.clone()];
            let gid = rows[0].group_id;
            if rows.len() < 2 {
                return Err(Error::GroupTooSmall(gid));
            }
            match rows.iter().filter(|r| r.chosen).count() {
                0 => return Err(Error::NoChoice(gid)),
                1 => {}
                _ => return Err(Error::MultipleChoices(gid)),
            }
        }
        Ok(data)
    }

    /// Position of a variable in the covariate layout.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|v| v == name)
    }

    /// Contiguous row ranges of the choice occasions, in storage order.
    pub fn occasion_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.rows.len() {
            if i == self.rows.len() || self.rows[i].group_id != self.rows[start].group_id {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

/// One occasion inside a [`ChoiceIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct Occasion {
    pub group_id: i64,
    /// Row range in the dataset.
    pub rows: Range<usize>,
    /// Absolute index of the chosen row.
    pub chosen_row: usize,
}

/// All occasions of one decision maker.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonIndex {
    pub person_id: i64,
    pub occasions: Vec<Occasion>,
}

/// Person/occasion index over a validated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceIndex {
    pub persons: Vec<PersonIndex>,
    pub n_persons: usize,
    pub n_groups: usize,
    pub n_choices: usize,
    pub n_observations: usize,
}

/// Index persons and occasions and compute the header counts.
pub fn build_index(data: &ChoiceDataset) -> ChoiceIndex {
    let mut persons: Vec<PersonIndex> = Vec::new();
    for range in data.occasion_ranges() {
        let first = &data.rows[range.start];
        let chosen_row = range.start
            + data.rows[range.clone()]
                .iter()
                .position(|r| r.chosen)
                .expect("validated dataset has one chosen row per group");
        let occ = Occasion {
            group_id: first.group_id,
            rows: range,
            chosen_row,
        };
        match persons.last_mut() {
            Some(p) if p.person_id == first.person_id => p.occasions.push(occ),
            _ => persons.push(PersonIndex {
                person_id: first.person_id,
                occasions: vec![occ],
            }),
        }
    }
    let n_groups: usize = persons.iter().map(|p| p.occasions.len()).sum();
    ChoiceIndex {
        n_persons: persons.len(),
        n_groups,
        n_choices: n_groups,
        n_observations: data.rows.len(),
        persons,
    }
}

fn is_missing(cell: &str) -> bool {
    let trimmed = cell.trim();
    trimmed.is_empty() || trimmed == "."
}

fn parse_number(cell: &str, column: &str, record: usize) -> Result<f64> {
    if is_missing(cell) {
        return Err(Error::MissingValue {
            column: column.to_string(),
            record,
        });
    }
    cell.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
        column: column.to_string(),
        record,
        value: cell.to_string(),
    })
}

fn parse_id(cell: &str, column: &str, record: usize) -> Result<i64> {
    if let Ok(v) = cell.trim().parse::<i64>() {
        return Ok(v);
    }
    let v = parse_number(cell, column, record)?;
    if v.fract() != 0.0 || v.abs() >= 9.0e15 {
        return Err(Error::NonIntegerId {
            column: column.to_string(),
            record,
        });
    }
    Ok(v as i64)
}

/// Load and validate a long-format CSV for the given model.
///
/// The file must be UTF-8 and comma-separated with a header row naming the
/// dependent variable, the group and identifier variables, and every model
/// variable. `.` or an empty cell denotes a missing value, which is an
/// error in any of those columns.
pub fn load_long_csv(path: &Path, spec: &ModelSpec) -> Result<ChoiceDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let dep_col = col(&spec.depvar)?;
    let group_col = col(&spec.group_var)?;
    let id_col = col(&spec.id_var)?;
    let vars = spec.data_vars();
    let var_cols = vars.iter().map(|v| col(v)).collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based, counting the header, so messages match editor line numbers.
        let line = i + 2;
        let dep = parse_number(&record[dep_col], &spec.depvar, line)?;
        if dep != 0.0 && dep != 1.0 {
            return Err(Error::NotBinary {
                record: line,
                value: dep,
            });
        }
        let covariates = var_cols
            .iter()
            .zip(vars.iter())
            .map(|(&c, name)| parse_number(&record[c], name, line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ChoiceRow {
            group_id: parse_id(&record[group_col], &spec.group_var, line)?,
            person_id: parse_id(&record[id_col], &spec.id_var, line)?,
            chosen: dep == 1.0,
            covariates,
        });
    }
    ChoiceDataset::from_rows(vars, rows)
}

/// A raw table of strings: one header, one row per record.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTable {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CaseTable {
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let column_names = reader.headers()?.iter().map(|h| h.to_string()).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record?.iter().map(|c| c.to_string()).collect());
        }
        Ok(Self { column_names, rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(&self.column_names)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Output of [`case_to_alternatives`]: the expanded long-format table plus
/// the names it generated.
#[derive(Debug, Clone)]
pub struct ConvertedCases {
    /// Original columns replicated per alternative, then `_id`, the chosen
    /// indicator, and the generated level columns.
    pub table: CaseTable,
    /// Name of the chosen indicator column.
    pub depvar: String,
    /// Generated covariate columns: per non-base level, the interactions
    /// with each case variable followed by the alternative constant.
    pub generated: Vec<String>,
}

impl ConvertedCases {
    /// View the conversion as a validated [`ChoiceDataset`] over the
    /// generated columns, with `_id` as both occasion and identifier key.
    pub fn to_dataset(&self) -> Result<ChoiceDataset> {
        let spec = ModelSpec {
            depvar: self.depvar.clone(),
            group_var: "_id".into(),
            id_var: "_id".into(),
            fixed_vars: Vec::new(),
            rand_vars: self.generated.clone(),
            price_var: None,
        };
        let id_col = self.table.col("_id")?;
        let dep_col = self.table.col(&self.depvar)?;
        let gen_cols = self
            .generated
            .iter()
            .map(|g| self.table.col(g))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for (i, row) in self.table.rows.iter().enumerate() {
            let id = parse_id(&row[id_col], "_id", i + 2)?;
            let dep = parse_number(&row[dep_col], &self.depvar, i + 2)?;
            rows.push(ChoiceRow {
                group_id: id,
                person_id: id,
                chosen: dep == 1.0,
                covariates: gen_cols
                    .iter()
                    .zip(&self.generated)
                    .map(|(&c, name)| parse_number(&row[c], name, i + 2))
                    .collect::<Result<Vec<f64>>>()?,
            });
        }
        ChoiceDataset::from_rows(spec.data_vars(), rows)
    }
}

/// Name a choice level the way the generated columns are spelled: numeric
/// levels get a `y` prefix, string levels are used as-is.
fn level_column_name(level: &str) -> String {
    if level.parse::<f64>().is_ok() {
        format!("y{level}")
    } else {
        level.to_string()
    }
}

/// Expand a one-row-per-case table into one row per alternative.
///
/// The distinct values of `choice_var` define the alternatives. The
/// smallest level (numeric when all levels parse, lexicographic otherwise)
/// is the base; each other level `l` contributes an alternative constant
/// column and one interaction column `lXv` per case variable `v`, equal to
/// `v` on that level's row and 0 elsewhere. All original columns are
/// carried through, and `gen` names the 0/1 chosen indicator.
pub fn case_to_alternatives(
    cases: &CaseTable,
    choice_var: &str,
    case_vars: &[String],
    gen: &str,
    case_id: Option<&str>,
) -> Result<ConvertedCases> {
    let choice_col = cases.col(choice_var)?;
    let case_var_cols = case_vars
        .iter()
        .map(|v| cases.col(v))
        .collect::<Result<Vec<_>>>()?;
    let id_col = case_id.map(|c| cases.col(c)).transpose()?;

    let mut levels: Vec<String> = Vec::new();
    for row in &cases.rows {
        let v = row[choice_col].trim().to_string();
        if is_missing(&v) {
            return Err(Error::InvalidArgument(format!(
                "missing value in choice column `{choice_var}`"
            )));
        }
        if !levels.contains(&v) {
            levels.push(v);
        }
    }
    if levels.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "choice column `{choice_var}` has fewer than 2 levels"
        )));
    }
    let all_numeric = levels.iter().all(|l| l.parse::<f64>().is_ok());
    if all_numeric {
        levels.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .partial_cmp(&b.parse::<f64>().unwrap())
                .unwrap()
        });
    } else {
        levels.sort();
    }

    let mut generated = Vec::new();
    for level in levels.iter().skip(1) {
        let lname = level_column_name(level);
        for v in case_vars {
            generated.push(format!("{lname}X{v}"));
        }
        generated.push(lname);
    }

    let mut column_names = cases.column_names.clone();
    column_names.push("_id".into());
    column_names.push(gen.to_string());
    column_names.extend(generated.iter().cloned());

    let mut rows = Vec::new();
    for (case_idx, case) in cases.rows.iter().enumerate() {
        let id_value = match id_col {
            Some(c) => case[c].clone(),
            None => (case_idx + 1).to_string(),
        };
        let choice = case[choice_col].trim();
        for level in &levels {
            let mut row = case.clone();
            row.push(id_value.clone());
            row.push(if level == choice { "1" } else { "0" }.to_string());
            for other in levels.iter().skip(1) {
                let on = other == level;
                for &vc in &case_var_cols {
                    let value = parse_number(&case[vc], &cases.column_names[vc], case_idx + 2)?;
                    row.push(if on { value.to_string() } else { "0".into() });
                }
                row.push(if on { "1" } else { "0" }.to_string());
            }
            rows.push(row);
        }
    }

    Ok(ConvertedCases {
        table: CaseTable { column_names, rows },
        depvar: gen.to_string(),
        generated,
    })
}

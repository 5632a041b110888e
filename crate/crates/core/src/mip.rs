//! Binary MIP instances, assignments, and feasibility checks.
//!
//! An instance is `opt c·x` subject to sparse rows `a·x (<=|>=|=) b` with every
//! variable binary. Rows store coefficients sorted by column with no explicit
//! zeros.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Absolute tolerance for row checks with non-integral coefficients.
pub const FEAS_TOL: f64 = 1e-6;

pub const INSTANCE_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "min")]
    Minimize,
    #[serde(rename = "max")]
    Maximize,
}

impl Sense {
    /// Multiplier that turns objectives of this sense into minimization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// True if `a` is strictly better than `b` by more than `tol`.
    pub fn improves(self, a: f64, b: f64, tol: f64) -> bool {
        match self {
            Sense::Minimize => a < b - tol,
            Sense::Maximize => a > b + tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "le")]
    Le,
    #[serde(rename = "ge")]
    Ge,
    #[serde(rename = "eq")]
    Eq,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub coefs: Vec<(usize, f64)>,
    #[serde(rename = "rel")]
    pub relation: Relation,
    pub rhs: f64,
}

impl ConstraintRow {
    /// Builds a row from arbitrary `(col, coef)` pairs: sorts by column,
    /// merges repeated columns, and drops zeros.
    pub fn new(coefs: impl IntoIterator<Item = (usize, f64)>, relation: Relation, rhs: f64) -> Self {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (col, val) in coefs {
            *merged.entry(col).or_insert(0.0) += val;
        }
        let coefs = merged.into_iter().filter(|&(_, v)| v != 0.0).collect();
        ConstraintRow {
            coefs,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefs.iter().map(|&(j, _)| j)
    }
}

/// A binary MIP. All variables are binary.
#[derive(Debug, Clone, PartialEq)]
pub struct MipInstance {
    pub name: String,
    pub sense: Sense,
    pub nvars: usize,
    pub obj: Vec<f64>,
    pub rows: Vec<ConstraintRow>,
}

/// On-disk form of [`MipInstance`].
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<u32>,
    name: String,
    sense: Sense,
    nvars: usize,
    obj: Vec<f64>,
    rows: Vec<ConstraintRow>,
}

impl MipInstance {
    pub fn new(name: impl Into<String>, sense: Sense, obj: Vec<f64>, rows: Vec<ConstraintRow>) -> Self {
        MipInstance {
            name: name.into(),
            sense,
            nvars: obj.len(),
            obj,
            rows,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Every structural invariant violation, in row order.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.nvars == 0 {
            errors.push("instance has no variables".to_string());
        }
        if self.obj.len() != self.nvars {
            errors.push(format!(
                "objective length {} does not match nvars {}",
                self.obj.len(),
                self.nvars
            ));
        }
        if let Some(j) = self.obj.iter().position(|c| !c.is_finite()) {
            errors.push(format!("objective coefficient {j} is not finite"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(col, val) in &row.coefs {
                if col >= self.nvars {
                    errors.push(format!("row {i}: column out of range ({col} >= {})", self.nvars));
                }
                if let Some(p) = prev {
                    if col == p {
                        errors.push(format!("row {i}: duplicate column {col}"));
                    } else if col < p {
                        errors.push(format!("row {i}: columns not sorted at {col}"));
                    }
                }
                if val == 0.0 {
                    errors.push(format!("row {i}: stored zero coefficient at column {col}"));
                } else if !val.is_finite() {
                    errors.push(format!("row {i}: non-finite coefficient at column {col}"));
                }
                prev = Some(col);
            }
            if !row.rhs.is_finite() {
                errors.push(format!("row {i}: non-finite rhs"));
            }
        }
        errors
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let errors = self.validate();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(errors))
        }
    }

    /// `c·a` for a complete assignment.
    pub fn objective_value(&self, a: &Assignment) -> Result<f64> {
        let values = a.to_values()?;
        self.check_len(a)?;
        Ok(dot(&self.obj, &values))
    }

    /// Indices of violated rows; the assignment is feasible iff the list is empty.
    pub fn violated_rows(&self, a: &Assignment) -> Result<Vec<usize>> {
        self.check_len(a)?;
        let values = a.to_values()?;
        Ok(self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| !row.relation.holds(row.activity(&values), row.rhs, FEAS_TOL))
            .map(|(i, _)| i)
            .collect())
    }

    pub fn check_feasible(&self, a: &Assignment) -> Result<(bool, Vec<usize>)> {
        let violated = self.violated_rows(a)?;
        Ok((violated.is_empty(), violated))
    }

    pub fn is_feasible(&self, a: &Assignment) -> bool {
        matches!(self.violated_rows(a), Ok(v) if v.is_empty())
    }

    /// True when every objective coefficient is an integer, so every 0/1
    /// solution has an integral objective.
    pub fn has_integral_objective(&self) -> bool {
        self.obj.iter().all(|c| c.fract() == 0.0)
    }

    fn check_len(&self, a: &Assignment) -> Result<()> {
        if a.len() != self.nvars {
            return Err(Error::LengthMismatch {
                expected: self.nvars,
                got: a.len(),
            });
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_file(io::read_json(path)?, path)
    }

    /// Parses the instance file format from a string.
    pub fn from_json(text: &str) -> Result<Self> {
        let origin = Path::new("<string>");
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
        Self::from_file(file, origin)
    }

    fn from_file(file: InstanceFile, path: &Path) -> Result<Self> {
        if let Some(v) = file.version {
            if v != INSTANCE_FILE_VERSION {
                return Err(Error::Version {
                    found: v,
                    expected: INSTANCE_FILE_VERSION,
                });
            }
        }
        let inst = MipInstance {
            name: file.name,
            sense: file.sense,
            nvars: file.nvars,
            obj: file.obj,
            rows: file.rows,
        };
        let errors = inst.validate();
        if !errors.is_empty() {
            return Err(Error::parse(path, errors.join("; ")));
        }
        Ok(inst)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, &self.to_file())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    fn to_file(&self) -> InstanceFile {
        InstanceFile {
            version: Some(INSTANCE_FILE_VERSION),
            name: self.name.clone(),
            sense: self.sense,
            nvars: self.nvars,
            obj: self.obj.clone(),
            rows: self.rows.clone(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-variable value: fixed to 0, fixed to 1, or free (`None`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<Option<bool>>);

impl Assignment {
    pub fn free(n: usize) -> Self {
        Assignment(vec![None; n])
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Assignment(bits.iter().map(|&b| Some(b != 0)).collect())
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Assignment(bits.into_iter().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> Option<bool> {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, value: Option<bool>) {
        self.0[j] = value;
    }

    /// Copy with variable `j` fixed to `value`.
    pub fn with(&self, j: usize, value: bool) -> Self {
        let mut next = self.clone();
        next.0[j] = Some(value);
        next
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn num_fixed(&self) -> usize {
        self.0.iter().filter(|v| v.is_some()).count()
    }

    pub fn unfixed(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(j, _)| j)
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<bool>> + '_ {
        self.0.iter().copied()
    }

    /// 0/1 values of a complete assignment.
    pub fn to_values(&self) -> Result<Vec<f64>> {
        self.0
            .iter()
            .enumerate()
            .map(|(j, v)| match v {
                Some(true) => Ok(1.0),
                Some(false) => Ok(0.0),
                None => Err(Error::IncompleteAssignment(j)),
            })
            .collect()
    }

    pub fn to_bits(&self) -> Result<Vec<u8>> {
        Ok(self.to_values()?.into_iter().map(|v| v as u8).collect())
    }
}

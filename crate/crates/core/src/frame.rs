//! Column-oriented tables shared by the design builders and the estimator.

use std::io::Write;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;
use crate::tabular::CsvOut;

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }
}

/// Named columns of equal length, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    n_rows: usize,
    columns: IndexMap<String, Column>,
}

impl Frame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    /// Adds or replaces a column. The first column fixes the row count.
    pub fn insert(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if self.columns.is_empty() || (self.columns.len() == 1 && self.columns.contains_key(&name)) {
            self.n_rows = column.len();
        } else if column.len() != self.n_rows {
            return Err(Error::Spec(format!(
                "column `{name}` has {} rows, frame has {}",
                column.len(),
                self.n_rows
            )));
        }
        self.columns.insert(name, column);
        Ok(())
    }

    pub fn insert_numeric(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        self.insert(name, Column::Numeric(values))
    }

    pub fn insert_categorical(&mut self, name: impl Into<String>, values: Vec<String>) -> Result<()> {
        self.insert(name, Column::Categorical(values))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.columns.get(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(Column::Categorical(_)) => Err(Error::Spec(format!("column `{name}` is not numeric"))),
            None => Err(Error::Spec(format!("missing column `{name}`"))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match self.columns.get(name) {
            Some(Column::Categorical(v)) => Ok(v),
            Some(Column::Numeric(_)) => Err(Error::Spec(format!("column `{name}` is not categorical"))),
            None => Err(Error::Spec(format!("missing column `{name}`"))),
        }
    }

    /// String keys of a column, numeric values rendered at full precision.
    pub fn keys(&self, name: &str) -> Result<Vec<String>> {
        match self.columns.get(name) {
            Some(Column::Categorical(v)) => Ok(v.clone()),
            Some(Column::Numeric(v)) => Ok(v.iter().map(|x| format!("{x:?}")).collect()),
            None => Err(Error::Spec(format!("missing column `{name}`"))),
        }
    }

    /// New frame holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Frame {
        Frame {
            n_rows: rows.len(),
            columns: self.columns.iter().map(|(k, c)| (k.clone(), c.select(rows))).collect(),
        }
    }

    pub fn filter(&self, keep: &[bool]) -> Frame {
        let rows: Vec<usize> = (0..self.n_rows).filter(|&r| keep[r]).collect();
        self.select_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W, name: &str) -> Result<W> {
        let mut out = CsvOut::new(writer, name);
        out.row(self.columns.keys())?;
        for r in 0..self.n_rows {
            out.row(self.columns.values().map(|c| match c {
                Column::Numeric(v) => fmt_sig(v[r]),
                Column::Categorical(v) => v[r].clone(),
            }))?;
        }
        out.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_mismatch_rejected() {
        let mut f = Frame::new();
        f.insert_numeric("y", vec![1.0, 2.0]).unwrap();
        assert!(f.insert_numeric("x", vec![1.0]).is_err());
        f.insert_categorical("g", vec!["a".into(), "b".into()]).unwrap();
        assert!(f.numeric("g").is_err());
        assert!(f.categorical("g").is_ok());
    }

    #[test]
    fn filter_and_csv() {
        let mut f = Frame::new();
        f.insert_numeric("y", vec![1.0, 0.5, 3.0]).unwrap();
        f.insert_categorical("g", vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let g = f.filter(&[true, false, true]);
        let text = String::from_utf8(g.write_csv(Vec::new(), "t.csv").unwrap()).unwrap();
        assert_eq!(text, "y,g\n1,a\n3,c\n");
    }
}

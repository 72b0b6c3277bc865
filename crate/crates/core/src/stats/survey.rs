use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Consumer-level numeric table: one row per consumer id, one column per
/// variable. Missing cells are `NaN`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SurveyTable {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SurveyTable {
    pub fn new(columns: Vec<String>) -> Self {
        SurveyTable {
            columns,
            ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the header");
        self.ids.push(id.into());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .column_index(name)
            .ok_or_else(|| Error::SchemaError(format!("survey has no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn row_of(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|i| i == id).map(|k| self.rows[k].as_slice())
    }

    /// Reads `consumer_id` plus numeric columns; empty and `NA` cells become `NaN`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let id_col = headers
            .iter()
            .position(|h| h.trim() == "consumer_id")
            .ok_or_else(|| Error::SchemaError("survey lacks a `consumer_id` column".into()))?;
        let columns: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != id_col)
            .map(|(_, h)| h.trim().to_owned())
            .collect();
        let mut table = SurveyTable::new(columns);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let mut row = Vec::with_capacity(table.columns.len());
            for (i, cell) in rec.iter().enumerate() {
                if i == id_col {
                    continue;
                }
                let cell = cell.trim();
                let v = if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    f64::NAN
                } else {
                    cell.parse().map_err(|_| Error::ParseError {
                        line,
                        message: format!("`{cell}` is not a number"),
                    })?
                };
                row.push(v);
            }
            table.push(rec[id_col].trim(), row);
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("consumer_id").chain(self.columns.iter().map(String::as_str)))?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let cells = row
                .iter()
                .map(|v| if v.is_nan() { String::new() } else { format!("{v}") });
            w.write_record(std::iter::once(id.clone()).chain(cells))?;
        }
        w.flush().map_err(|e| Error::io("survey", e))?;
        Ok(())
    }
}

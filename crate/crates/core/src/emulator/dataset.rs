//! Columnar dataset ingestion: a comma-separated file with named columns
//! plus a JSON sidecar declaring column roles and per-source costs.
//!
//! Continuous columns parse as floats; categorical columns carry string
//! levels that are mapped to indices in first-seen order; the source column
//! holds one of the names declared by the sidecar (source index = position
//! in the sidecar list).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AugmentedInput, InputSpace, MixedInput, TrainingData};
use crate::error::DatasetError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarColumns {
    #[serde(default)]
    pub continuous: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    pub source: String,
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarSource {
    pub name: String,
    pub cost: f64,
    /// Marks the high-fidelity source.
    #[serde(default)]
    pub hf: bool,
}

/// Sidecar schema: column roles and the declared source list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub columns: SidecarColumns,
    pub sources: Vec<SidecarSource>,
}

/// A parsed dataset ready for emulation, with source/cost metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: TrainingData,
    pub source_names: Vec<String>,
    pub costs: Vec<f64>,
    pub hf_index: Option<usize>,
    /// String levels of each categorical variable, in first-seen order.
    pub level_names: Vec<Vec<String>>,
}

/// Load a dataset from a CSV file and its JSON sidecar.
pub fn load_dataset(csv_path: &Path, sidecar_path: &Path) -> Result<Dataset, DatasetError> {
    let read = |path: &Path| {
        std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    let sidecar: DatasetSidecar = serde_json::from_str(&read(sidecar_path)?)
        .map_err(|e| DatasetError::Sidecar(e.to_string()))?;
    parse_dataset(&read(csv_path)?, &sidecar)
}

/// Parse CSV text against a sidecar declaration.
pub fn parse_dataset(csv_text: &str, sidecar: &DatasetSidecar) -> Result<Dataset, DatasetError> {
    if sidecar.sources.is_empty() {
        return Err(DatasetError::Sidecar("sidecar declares no sources".into()));
    }
    let mut lines = csv_text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| DatasetError::Parse {
            line: 1,
            detail: "file is empty".into(),
        })?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    let col_index = |name: &str| -> Result<usize, DatasetError> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| DatasetError::Sidecar(format!("column '{name}' not found in header")))
    };

    let cont_cols: Vec<usize> = sidecar
        .columns
        .continuous
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_, _>>()?;
    let cat_cols: Vec<usize> = sidecar
        .columns
        .categorical
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_, _>>()?;
    let source_col = col_index(&sidecar.columns.source)?;
    let output_col = col_index(&sidecar.columns.output)?;

    let source_index: HashMap<&str, usize> = sidecar
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();

    let mut level_names: Vec<Vec<String>> = vec![Vec::new(); cat_cols.len()];
    let mut rows: Vec<(Vec<f64>, Vec<usize>, usize, f64)> = Vec::new();

    for (line_idx, line) in lines {
        let line_no = line_idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(DatasetError::Parse {
                line: line_no,
                detail: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        let mut continuous = Vec::with_capacity(cont_cols.len());
        for (&col, name) in cont_cols.iter().zip(&sidecar.columns.continuous) {
            let value: f64 = fields[col].parse().map_err(|_| DatasetError::Parse {
                line: line_no,
                detail: format!("column '{name}': cannot parse '{}' as a number", fields[col]),
            })?;
            continuous.push(value);
        }
        let mut categorical = Vec::with_capacity(cat_cols.len());
        for (v, &col) in cat_cols.iter().enumerate() {
            let label = fields[col];
            let level = match level_names[v].iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    level_names[v].push(label.to_string());
                    level_names[v].len() - 1
                }
            };
            categorical.push(level);
        }
        let source = *source_index
            .get(fields[source_col])
            .ok_or_else(|| DatasetError::Parse {
                line: line_no,
                detail: format!(
                    "source '{}' is not declared in the sidecar",
                    fields[source_col]
                ),
            })?;
        let output: f64 = fields[output_col].parse().map_err(|_| DatasetError::Parse {
            line: line_no,
            detail: format!(
                "output column: cannot parse '{}' as a number",
                fields[output_col]
            ),
        })?;
        rows.push((continuous, categorical, source, output));
    }

    if rows.is_empty() {
        return Err(DatasetError::Parse {
            line: 2,
            detail: "no data rows".into(),
        });
    }

    let cardinalities: Vec<usize> = level_names.iter().map(Vec::len).collect();
    let space = InputSpace::new(cont_cols.len(), cardinalities, sidecar.sources.len())?;
    let mut inputs = Vec::with_capacity(rows.len());
    let mut outputs = Vec::with_capacity(rows.len());
    for (continuous, categorical, source, output) in rows {
        inputs.push(AugmentedInput {
            point: MixedInput {
                continuous,
                categorical,
            },
            source,
        });
        outputs.push(output);
    }
    let data = TrainingData::new(space, inputs, outputs)?;
    let hf_index = sidecar.sources.iter().position(|s| s.hf);
    Ok(Dataset {
        data,
        source_names: sidecar.sources.iter().map(|s| s.name.clone()).collect(),
        costs: sidecar.sources.iter().map(|s| s.cost).collect(),
        hf_index,
        level_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sidecar() -> DatasetSidecar {
        DatasetSidecar {
            columns: SidecarColumns {
                continuous: vec!["x1".into(), "x2".into()],
                categorical: vec!["mat".into()],
                source: "src".into(),
                output: "y".into(),
            },
            sources: vec![
                SidecarSource {
                    name: "hf".into(),
                    cost: 1000.0,
                    hf: true,
                },
                SidecarSource {
                    name: "lf".into(),
                    cost: 10.0,
                    hf: false,
                },
            ],
        }
    }

    #[test]
    fn parses_columns_levels_and_sources() {
        let csv = "x1,x2,mat,src,y\n0.1,0.2,steel,hf,1.5\n0.3,0.4,brass,lf,2.5\n0.5,0.6,steel,lf,3.5\n";
        let ds = parse_dataset(csv, &sidecar()).unwrap();
        assert_eq!(ds.data.len(), 3);
        assert_eq!(ds.data.space().continuous_dims, 2);
        assert_eq!(ds.data.space().categorical_cardinalities, vec![2]);
        assert_eq!(ds.level_names[0], vec!["steel", "brass"]);
        assert_eq!(ds.data.inputs()[1].point.categorical, vec![1]);
        assert_eq!(ds.data.inputs()[2].source, 1);
        assert_eq!(ds.hf_index, Some(0));
        assert_eq!(ds.costs, vec![1000.0, 10.0]);
    }

    #[test]
    fn bad_number_reports_its_line() {
        let csv = "x1,x2,mat,src,y\n0.1,0.2,steel,hf,1.5\n0.3,not_a_number,brass,lf,2.5\n";
        match parse_dataset(csv, &sidecar()) {
            Err(DatasetError::Parse { line, detail }) => {
                assert_eq!(line, 3);
                assert!(detail.contains("x2"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_source_reports_its_line() {
        let csv = "x1,x2,mat,src,y\n0.1,0.2,steel,mystery,1.5\n";
        match parse_dataset(csv, &sidecar()) {
            Err(DatasetError::Parse { line, detail }) => {
                assert_eq!(line, 2);
                assert!(detail.contains("mystery"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let csv = "x1,x2,mat,src,y\n0.1,0.2,steel,hf\n";
        assert!(matches!(
            parse_dataset(csv, &sidecar()),
            Err(DatasetError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn missing_column_is_a_sidecar_error() {
        let csv = "x1,mat,src,y\n0.1,steel,hf,1.0\n";
        assert!(matches!(
            parse_dataset(csv, &sidecar()),
            Err(DatasetError::Sidecar(_))
        ));
    }
}

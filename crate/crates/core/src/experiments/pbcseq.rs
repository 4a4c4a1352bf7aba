//! Loader for the Mayo Clinic primary biliary cirrhosis follow-up data
//! (`pbcseq`): last recorded SGOT per patient, grouped by final status.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::dataset::GroupedDataset;

/// A column addressed by 0-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Column positions and status coding. The defaults follow the layout
/// `id futime status drug age sex day ascites hepato spiders edema bili chol
/// albumin alk sgot platelets protime stage`.
#[derive(Debug, Clone, PartialEq)]
pub struct PbcLayout {
    pub id: ColumnRef,
    pub status: ColumnRef,
    pub day: ColumnRef,
    pub sgot: ColumnRef,
    /// Status codes for the three groups, in output order.
    pub group_codes: [i64; 3],
    pub na_tokens: Vec<String>,
}

impl Default for PbcLayout {
    fn default() -> Self {
        Self {
            id: ColumnRef::Index(0),
            status: ColumnRef::Index(2),
            day: ColumnRef::Index(6),
            sgot: ColumnRef::Index(15),
            // dead without transplant, transplanted, alive without transplant
            group_codes: [2, 1, 0],
            na_tokens: vec!["NA".into(), ".".into(), "".into()],
        }
    }
}

/// Dirichlet preset for the three-group analysis: 10 on the (1,1) and (3,3)
/// cells and 1 elsewhere, row-major.
pub fn pbc_dirichlet_alpha() -> Vec<f64> {
    let mut a = vec![1.0; 9];
    a[0] = 10.0;
    a[8] = 10.0;
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbcData {
    pub dataset: GroupedDataset,
    /// Patients with at least one recorded SGOT.
    pub individuals: usize,
    /// Group means removed by the normalization.
    pub raw_means: [f64; 3],
}

struct Record {
    status: i64,
    day: f64,
    sgot: f64,
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(|f| f.trim().trim_matches('"')).collect()
    } else {
        line.split_whitespace().map(|f| f.trim_matches('"')).collect()
    }
}

fn resolve(col: &ColumnRef, header: Option<&[&str]>, path: &Path) -> Result<usize> {
    match col {
        ColumnRef::Index(i) => Ok(*i),
        ColumnRef::Name(name) => header
            .and_then(|h| h.iter().position(|f| f.eq_ignore_ascii_case(name)))
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("column {name:?} not found in header"),
            }),
    }
}

pub fn load_pbcseq(path: &Path, layout: &PbcLayout) -> Result<PbcData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pbcseq(&text, path, layout)
}

pub fn parse_pbcseq(text: &str, path: &Path, layout: &PbcLayout) -> Result<PbcData> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let Some(&(_, first)) = lines.first() else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "file has no data rows".into(),
        });
    };
    let first_fields = split_fields(first);
    // Named columns need a header; otherwise a non-numeric id marks one.
    let has_header = match &layout.id {
        ColumnRef::Name(_) => true,
        ColumnRef::Index(i) => first_fields.get(*i).is_none_or(|f| f.parse::<f64>().is_err()),
    } || [&layout.status, &layout.day, &layout.sgot]
        .iter()
        .any(|c| matches!(c, ColumnRef::Name(_)));
    let header = has_header.then_some(first_fields.as_slice());
    let cols = [
        resolve(&layout.id, header, path)?,
        resolve(&layout.status, header, path)?,
        resolve(&layout.day, header, path)?,
        resolve(&layout.sgot, header, path)?,
    ];
    let width = cols.iter().max().copied().unwrap_or(0) + 1;

    let mut last: BTreeMap<i64, Record> = BTreeMap::new();
    for &(line, raw) in lines.iter().skip(usize::from(has_header)) {
        let fields = split_fields(raw);
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if fields.len() < width {
            return Err(err(format!("expected at least {width} fields, found {}", fields.len())));
        }
        let is_na = |f: &str| layout.na_tokens.iter().any(|t| t == f);
        let num = |i: usize, what: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| err(format!("bad {what} value {:?}", fields[i])))
        };
        let sgot_field = fields[cols[3]];
        if is_na(sgot_field) {
            continue;
        }
        let id = num(cols[0], "id")?;
        if id.fract() != 0.0 {
            return Err(err(format!("id {id} is not an integer")));
        }
        let status = num(cols[1], "status")?;
        if status.fract() != 0.0 || !layout.group_codes.contains(&(status as i64)) {
            return Err(err(format!("unknown status code {:?}", fields[cols[1]])));
        }
        let day = num(cols[2], "day")?;
        let sgot = num(cols[3], "sgot")?;
        let rec = Record {
            status: status as i64,
            day,
            sgot,
        };
        match last.get(&(id as i64)) {
            Some(prev) if prev.day > day => {}
            _ => {
                last.insert(id as i64, rec);
            }
        }
    }

    let mut groups = vec![Vec::new(), Vec::new(), Vec::new()];
    for rec in last.values() {
        let g = layout
            .group_codes
            .iter()
            .position(|&c| c == rec.status)
            .expect("status validated");
        groups[g].push(rec.sgot);
    }
    let mut raw_means = [0.0; 3];
    for (g, mean) in groups.iter_mut().zip(raw_means.iter_mut()) {
        if g.is_empty() {
            continue;
        }
        *mean = g.iter().sum::<f64>() / g.len() as f64;
        for x in g.iter_mut() {
            *x -= *mean;
        }
    }
    Ok(PbcData {
        individuals: last.len(),
        dataset: GroupedDataset::new(groups)?,
        raw_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
1 400 2 1 58.77 f 0 1 1 1 1 14.5 261 2.6 1718 138.0 190 12.2 4
1 400 2 1 58.77 f 192 1 1 1 1 21.3 NA 2.94 1612 6.2 183 11.2 4
2 5169 0 1 56.45 f 0 0 1 1 0 1.1 302 4.14 7395 113.5 221 10.6 3
2 5169 0 1 56.45 f 1360 0 1 1 0 1.5 NA 3.6 NA 90.0 188 11 3
2 5169 0 1 56.45 f 1900 0 1 1 0 1.8 NA 3.6 NA NA 188 11 3
3 1012 1 1 70.07 m 0 0 0 0 0 1.4 176 3.48 516 96.1 151 12 4
4 1925 2 1 54.74 f 0 0 1 1 0 1.8 244 2.54 6121 60.6 183 10.3 4
";

    #[test]
    fn last_recorded_sgot_by_status() {
        let d = parse_pbcseq(SAMPLE, Path::new("mem"), &PbcLayout::default()).unwrap();
        assert_eq!(d.individuals, 4);
        assert_eq!(d.dataset.sizes(), vec![2, 1, 1]);
        // Patient 2's last row has no SGOT, so the day-1360 value is used.
        assert!((d.raw_means[2] - 90.0).abs() < 1e-12);
        assert!((d.raw_means[0] - (6.2 + 60.6) / 2.0).abs() < 1e-12);
        for g in &d.dataset.groups {
            assert!((g.iter().sum::<f64>() / g.len() as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_with_named_columns() {
        let text = "id,status,day,ast\n7,2,0,50\n7,2,10,70\n8,0,3,20\n9,1,5,30\n";
        let layout = PbcLayout {
            id: ColumnRef::Name("id".into()),
            status: ColumnRef::Name("status".into()),
            day: ColumnRef::Name("day".into()),
            sgot: ColumnRef::Name("AST".into()),
            ..PbcLayout::default()
        };
        let d = parse_pbcseq(text, Path::new("mem"), &layout).unwrap();
        assert_eq!(d.raw_means, [70.0, 30.0, 20.0]);
    }

    #[test]
    fn errors_report_lines_and_codes() {
        let layout = PbcLayout {
            sgot: ColumnRef::Index(3),
            day: ColumnRef::Index(2),
            status: ColumnRef::Index(1),
            ..PbcLayout::default()
        };
        match parse_pbcseq("1 2 0 5\n2 7 0 4\n", Path::new("mem"), &layout) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("status"));
            }
            other => panic!("{other:?}"),
        }
        match parse_pbcseq("1 2 0 5\n2 0 x 4\n", Path::new("mem"), &layout) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_pbcseq(Path::new("/nonexistent/pbcseq.dat"), &layout),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn alpha_preset() {
        let a = pbc_dirichlet_alpha();
        assert_eq!(a, vec![10.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0]);
    }
}

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Input file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// `uid::iid::rating::timestamp`, every rating an implicit positive.
    MovielensDat,
    /// `user<TAB>item[<TAB>count]`.
    TsvEdges,
}

impl FromStr for Format {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens-dat" => Ok(Format::MovielensDat),
            "tsv-edges" => Ok(Format::TsvEdges),
            other => Err(HarnessError::Usage(format!("unknown format '{other}' (expected movielens-dat or tsv-edges)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
    pub weight: u32,
}

fn parse_err(line: usize, message: impl Into<String>) -> HarnessError {
    rwe_core::Error::Parse { line, message: message.into() }.into()
}

fn parse_line(line: &str, lineno: usize, format: Format) -> Result<InteractionRecord> {
    let (user, item, weight) = match format {
        Format::MovielensDat => {
            let f: Vec<&str> = line.split("::").collect();
            if f.len() != 4 {
                return Err(parse_err(lineno, format!("expected 4 '::'-separated fields, found {}", f.len())));
            }
            f[2].trim().parse::<f64>().map_err(|_| parse_err(lineno, format!("bad rating '{}'", f[2])))?;
            (f[0], f[1], 1)
        }
        Format::TsvEdges => {
            let f: Vec<&str> = line.split('\t').collect();
            let weight = match f.len() {
                2 => 1,
                3 => f[2].trim().parse().map_err(|_| parse_err(lineno, format!("bad count '{}'", f[2])))?,
                n => return Err(parse_err(lineno, format!("expected 2 or 3 tab-separated fields, found {n}"))),
            };
            (f[0], f[1], weight)
        }
    };
    let (user, item) = (user.trim(), item.trim());
    if user.is_empty() || item.is_empty() {
        return Err(parse_err(lineno, "empty user or item id"));
    }
    Ok(InteractionRecord { user_id: user.to_string(), item_id: item.to_string(), weight })
}

/// Parses records from a reader; blank lines are skipped.
pub fn parse_reader<R: BufRead>(input: R, format: Format) -> Result<Vec<InteractionRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| parse_err(n + 1, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(line, n + 1, format)?);
    }
    Ok(out)
}

pub fn parse_dataset(path: &Path, format: Format) -> Result<Vec<InteractionRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_reader(BufReader::new(file), format).map_err(|e| match e {
        HarnessError::Data(source) => HarnessError::File { path: path.to_path_buf(), source },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn movielens_line() {
        let r = parse_reader("1::1193::5::978300760\n".as_bytes(), Format::MovielensDat).unwrap();
        assert_eq!(r, vec![InteractionRecord { user_id: "1".into(), item_id: "1193".into(), weight: 1 }]);
    }

    #[test]
    fn tsv_line_with_count() {
        let r = parse_reader("u7\tcontentX\t3\n\nu8\tcontentY\n".as_bytes(), Format::TsvEdges).unwrap();
        assert_eq!(r[0], InteractionRecord { user_id: "u7".into(), item_id: "contentX".into(), weight: 3 });
        assert_eq!(r[1].weight, 1);
    }

    #[test]
    fn empty_input() {
        assert!(parse_reader("".as_bytes(), Format::TsvEdges).unwrap().is_empty());
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = parse_reader("1::2::3::4\n1::2\n".as_bytes(), Format::MovielensDat).unwrap_err();
        assert!(matches!(err, HarnessError::Data(rwe_core::Error::Parse { line: 2, .. })), "{err}");
        let err = parse_reader("a\tb\tx\n".as_bytes(), Format::TsvEdges).unwrap_err();
        assert!(matches!(err, HarnessError::Data(rwe_core::Error::Parse { line: 1, .. })));
        assert!(parse_reader("\tb\n".as_bytes(), Format::TsvEdges).is_err());
    }

    #[test]
    fn unknown_format() {
        assert!("csv".parse::<Format>().is_err());
        assert_eq!("tsv-edges".parse::<Format>().unwrap(), Format::TsvEdges);
    }
}

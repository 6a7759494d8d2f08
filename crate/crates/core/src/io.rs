//! The `SC v1` instance format and its `.meta.json` sidecar.
//!
//! ```text
//! SC v1
//! <n> <m>
//! <k> <e_1> ... <e_k>      (m lines, strictly increasing, 0 <= e_j < n)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, ParseError, Result};
use crate::system::{ElementSet, SetSystem};

pub const MAGIC: &str = "SC v1";

pub fn format_instance(system: &SetSystem) -> String {
    let mut out = String::with_capacity(16 + system.total_entries() * 5);
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "{} {}", system.universe_size(), system.num_sets());
    for set in system.sets() {
        let _ = write!(out, "{}", set.len());
        for e in set.iter() {
            let _ = write!(out, " {e}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_instance(text: &str) -> Result<SetSystem, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(ParseError::BadMagic { line: 1 }),
    }

    let (n, m) = match lines.next() {
        Some((line, l)) => {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(n)), Some(Ok(m)), None) if n >= 1 => (n, m),
                _ => return Err(ParseError::BadHeader { line }),
            }
        }
        None => return Err(ParseError::BadHeader { line: 2 }),
    };

    let mut sets = Vec::with_capacity(m);
    let mut last_line = 2;
    for (line, l) in lines {
        if sets.len() == m {
            if l.trim().is_empty() {
                continue;
            }
            return Err(ParseError::SetCount {
                line,
                expected: m,
                found: m + 1,
            });
        }
        last_line = line;
        sets.push(parse_set_line(line, l, n)?);
    }
    if sets.len() != m {
        return Err(ParseError::SetCount {
            line: last_line,
            expected: m,
            found: sets.len(),
        });
    }
    Ok(SetSystem::new(n, sets).expect("elements validated against n"))
}

fn parse_set_line(line: usize, text: &str, n: usize) -> Result<ElementSet, ParseError> {
    let bad = |reason: &str| ParseError::BadSetLine {
        line,
        reason: reason.to_string(),
    };
    let mut fields = text.split_whitespace();
    let k: usize = fields
        .next()
        .ok_or_else(|| bad("empty line"))?
        .parse()
        .map_err(|_| bad("count is not an integer"))?;
    let mut elements: Vec<u32> = Vec::with_capacity(k);
    for f in fields {
        let e: u64 = f.parse().map_err(|_| bad("element is not an integer"))?;
        if e >= n as u64 {
            return Err(ParseError::ElementOutOfRange {
                line,
                element: e,
                n,
            });
        }
        let e = e as u32;
        if let Some(&prev) = elements.last() {
            if e == prev {
                return Err(ParseError::Duplicate { line, element: e });
            }
            if e < prev {
                return Err(ParseError::Unsorted { line, element: e });
            }
        }
        elements.push(e);
    }
    if elements.len() != k {
        return Err(bad(&format!(
            "count says {k} elements, line has {}",
            elements.len()
        )));
    }
    Ok(ElementSet::from_sorted_unchecked(elements))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<SetSystem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_instance(&text)?)
}

pub fn write_instance(system: &SetSystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_instance(system)).map_err(|e| Error::io(path, e))
}

/// `x.sc` -> `x.sc.meta.json`.
pub fn meta_path(instance: impl AsRef<Path>) -> PathBuf {
    let mut s = instance.as_ref().as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_meta(instance: impl AsRef<Path>, meta: &serde_json::Value) -> Result<PathBuf> {
    let path = meta_path(instance);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_meta(instance: impl AsRef<Path>) -> Result<serde_json::Value> {
    let path = meta_path(instance);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_reference_file() {
        let s = parse_instance("SC v1\n3 2\n2 0 1\n2 1 2\n").unwrap();
        assert_eq!(s.universe_size(), 3);
        assert_eq!(s.set(0).as_slice(), &[0, 1]);
        assert_eq!(s.set(1).as_slice(), &[1, 2]);
    }

    #[test]
    fn empty_set_line() {
        let s = parse_instance("SC v1\n3 1\n0\n").unwrap();
        assert!(s.set(0).is_empty());
    }

    #[test]
    fn distinct_errors() {
        assert_eq!(
            parse_instance("SC v1\n3 1\n2 1 0\n"),
            Err(ParseError::Unsorted {
                line: 3,
                element: 0
            })
        );
        assert_eq!(
            parse_instance("SC v1\n3 1\n2 1 1\n"),
            Err(ParseError::Duplicate {
                line: 3,
                element: 1
            })
        );
        assert_eq!(
            parse_instance("SC v1\n3 1\n1 3\n"),
            Err(ParseError::ElementOutOfRange {
                line: 3,
                element: 3,
                n: 3
            })
        );
        assert_eq!(
            parse_instance("SC v2\n3 1\n0\n"),
            Err(ParseError::BadMagic { line: 1 })
        );
        assert_eq!(
            parse_instance("SC v1\n0 1\n0\n"),
            Err(ParseError::BadHeader { line: 2 })
        );
        assert_eq!(
            parse_instance("SC v1\n3 1 9\n0\n"),
            Err(ParseError::BadHeader { line: 2 })
        );
        assert!(matches!(
            parse_instance("SC v1\n3 2\n0\n"),
            Err(ParseError::SetCount {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_instance("SC v1\n3 1\n2 0\n"),
            Err(ParseError::BadSetLine { line: 3, .. })
        ));
    }

    #[test]
    fn file_round_trip_and_meta_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.sc");
        let s = SetSystem::from_lists(4, [vec![0u32, 3], vec![], vec![1, 2]]).unwrap();
        write_instance(&s, &p).unwrap();
        assert_eq!(read_instance(&p).unwrap(), s);
        assert_eq!(meta_path(&p), dir.path().join("x.sc.meta.json"));
        let meta = serde_json::json!({"generator": "sc", "seed": 7});
        write_meta(&p, &meta).unwrap();
        assert_eq!(read_meta(&p).unwrap(), meta);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_instance("/nonexistent/dir/x.sc").unwrap_err();
        assert!(err.is_io());
    }

    proptest! {
        #[test]
        fn write_read_is_identity(n in 1usize..200, lists in prop::collection::vec(prop::collection::vec(any::<u32>(), 0..20), 0..10)) {
            let lists: Vec<Vec<u32>> = lists.into_iter().map(|l| l.into_iter().map(|e| e % n as u32).collect()).collect();
            let s = SetSystem::from_lists(n, lists).unwrap();
            let text = format_instance(&s);
            let back = parse_instance(&text).unwrap();
            prop_assert_eq!(format_instance(&back), text);
            prop_assert_eq!(back, s);
        }
    }
}

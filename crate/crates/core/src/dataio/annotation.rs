use std::fmt::Write as _;

use super::Va;
use crate::error::{Error, Result};

pub const ANNOTATION_HEADER: &str = "valence,arousal";

/// Parses a per-video annotation file: a `valence,arousal` header followed
/// by one comma-separated pair per frame. Blank lines are ignored.
pub fn parse_annotation_file(text: &str) -> Result<Vec<Va>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == ANNOTATION_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {ANNOTATION_HEADER:?}, found {header:?}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty annotation file".into(),
            })
        }
    }

    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let (Some(v), Some(a), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two comma-separated values, found {line:?}"),
            });
        };
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("{s:?}: {e}"),
            })
        };
        let label = Va::new(parse(v)?, parse(a)?);
        label
            .validate()
            .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
        out.push(label);
    }
    Ok(out)
}

/// Serializes labels in the annotation format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_annotation_file(labels: &[Va]) -> String {
    let mut s = String::with_capacity(16 + labels.len() * 20);
    s.push_str(ANNOTATION_HEADER);
    s.push('\n');
    for l in labels {
        let _ = writeln!(s, "{},{}", l.valence, l.arousal);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_single_pair() {
        assert_eq!(
            parse_annotation_file("valence,arousal\n0.5,-0.2\n").unwrap(),
            vec![Va::new(0.5, -0.2)]
        );
    }

    #[test]
    fn sentinel_passes_through() {
        assert_eq!(
            parse_annotation_file("valence,arousal\n-5,-5\n0.1,0.1\n").unwrap(),
            vec![Va::UNANNOTATED, Va::new(0.1, 0.1)]
        );
    }

    #[test]
    fn out_of_range_is_a_validation_error() {
        assert!(matches!(
            parse_annotation_file("valence,arousal\n2.0,0.0\n"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_annotation_file("valence,arousal\n0.1,0.2\n0.3;0.4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_annotation_file("valence,arousal\n0.1,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_annotation_file("0.1,0.2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn half_sentinel_is_rejected() {
        assert!(parse_annotation_file("valence,arousal\n-5,0.3\n").is_err());
    }

    proptest! {
        #[test]
        fn exact_round_trip(raw in proptest::collection::vec((-1.0f64..=1.0, -1.0f64..=1.0), 0..50)) {
            let labels: Vec<Va> = raw.iter().map(|&(v, a)| Va::new(v, a)).collect();
            let text = format_annotation_file(&labels);
            let parsed = parse_annotation_file(&text).unwrap();
            prop_assert_eq!(&parsed, &labels);
            prop_assert_eq!(format_annotation_file(&parsed), text);
        }
    }
}

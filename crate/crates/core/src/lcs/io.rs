use std::io::{BufRead, Write};

use super::train::LearningCurve;
use super::{ClassifierRule, LcsError};
use crate::artifact::{read_schema_line, write_schema_line};
use crate::SCHEMA_VERSION;

fn check_schema_line<R: BufRead>(input: &mut R) -> Result<(), LcsError> {
    match read_schema_line(input)? {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(found) => Err(LcsError::Schema {
            found,
            expected: SCHEMA_VERSION,
        }),
        None => Err(LcsError::Format("missing schema_version line".into())),
    }
}

/// Columns: condition, action, strength.
pub fn write_population_csv<W: Write>(mut out: W, population: &[ClassifierRule]) -> Result<(), LcsError> {
    write_schema_line(&mut out)?;
    let mut w = csv::Writer::from_writer(out);
    for r in population {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_population_csv<R: BufRead>(mut input: R) -> Result<Vec<ClassifierRule>, LcsError> {
    check_schema_line(&mut input)?;
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let r: ClassifierRule = row?;
        out.push(ClassifierRule::new(&r.condition, r.action, r.strength)?);
    }
    Ok(out)
}

/// Columns: iteration, proportion_correct.
pub fn write_curve_csv<W: Write>(mut out: W, curve: &LearningCurve) -> Result<(), LcsError> {
    write_schema_line(&mut out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "proportion_correct"])?;
    for (i, p) in &curve.samples {
        w.write_record([i.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: BufRead>(mut input: R) -> Result<LearningCurve, LcsError> {
    check_schema_line(&mut input)?;
    let mut samples = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let (i, p): (usize, f64) = row?;
        samples.push((i, p));
    }
    Ok(LearningCurve { samples })
}

//! Versioned text serialization of a trained model set.
//!
//! Floats print with 17 significant digits, so every f64 survives a write
//! and read bit for bit while the file stays diffable and greppable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::classes::{ClassMap, EventClass};
use crate::error::{Error, Result};

use super::gmm::Gmm;
use super::hmm::HmmModel;
use super::ModelSet;

const VERSION_LINE: &str = "MODELSETv1";

pub fn write_model_set(path: &Path, set: &ModelSet) -> Result<()> {
    set.validate()?;
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(VERSION_LINE.to_string());
    line(format!("system {}", set.system_id));
    line(format!("dim {}", set.dim()));
    line(format!("frame_period {:.16e}", set.frame_period));
    line(format!("frames_per_epoch {}", set.frames_per_epoch));
    for (class, model) in set.models.iter() {
        line(format!("class {} states {}", class.token(), model.num_states()));
        let (self_p, next_p) = model.transition_probs();
        for (s, gmm) in model.states().iter().enumerate() {
            line(format!(
                "state {s} self {:.16e} next {:.16e} mixtures {}",
                self_p[s],
                next_p[s],
                gmm.num_components()
            ));
            for m in 0..gmm.num_components() {
                line(format!("mixture {m} weight {:.16e}", gmm.weights()[m]));
                let mut mean = String::from("mean");
                for v in &gmm.means()[m] {
                    write!(mean, " {v:.16e}").expect("writing to string");
                }
                line(mean);
                let mut var = String::from("var");
                for v in &gmm.vars()[m] {
                    write!(var, " {v:.16e}").expect("writing to string");
                }
                line(var);
            }
        }
    }
    line("end".to_string());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_model_set(path: &Path) -> Result<ModelSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = Lines {
        lines: text.lines().collect(),
        pos: 0,
        path,
    };

    let (n, first) = reader.next_line()?;
    if first != VERSION_LINE {
        return Err(Error::parse(path, n, format!("expected {VERSION_LINE} header")));
    }
    let system_id: u32 = reader.keyed_value("system")?;
    let dim: usize = reader.keyed_value("dim")?;
    let frame_period: f64 = reader.keyed_value("frame_period")?;
    let frames_per_epoch: usize = reader.keyed_value("frames_per_epoch")?;

    let mut models = Vec::with_capacity(EventClass::COUNT);
    for expected_class in EventClass::ALL {
        let (n, line) = reader.next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "class" || tokens[2] != "states" {
            return Err(Error::parse(path, n, "expected `class <TOKEN> states <n>`"));
        }
        let class: EventClass = tokens[1].parse().map_err(|_| {
            Error::parse(path, n, format!("unknown class token `{}`", tokens[1]))
        })?;
        if class != expected_class {
            return Err(Error::parse(
                path,
                n,
                format!(
                    "classes out of order: expected {}, found {}",
                    expected_class.token(),
                    class.token()
                ),
            ));
        }
        let num_states: usize = tokens[3]
            .parse()
            .map_err(|_| Error::parse(path, n, "invalid state count"))?;

        let mut states = Vec::with_capacity(num_states);
        let mut self_p = Vec::with_capacity(num_states);
        let mut next_p = Vec::with_capacity(num_states);
        for s in 0..num_states {
            let (n, line) = reader.next_line()?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 8
                || tokens[0] != "state"
                || tokens[2] != "self"
                || tokens[4] != "next"
                || tokens[6] != "mixtures"
            {
                return Err(Error::parse(
                    path,
                    n,
                    "expected `state <s> self <p> next <p> mixtures <m>`",
                ));
            }
            let idx: usize = tokens[1]
                .parse()
                .map_err(|_| Error::parse(path, n, "invalid state index"))?;
            if idx != s {
                return Err(Error::parse(path, n, format!("expected state {s}, found {idx}")));
            }
            self_p.push(parse_f64(tokens[3], path, n)?);
            next_p.push(parse_f64(tokens[5], path, n)?);
            let mixtures: usize = tokens[7]
                .parse()
                .map_err(|_| Error::parse(path, n, "invalid mixture count"))?;

            let mut weights = Vec::with_capacity(mixtures);
            let mut means = Vec::with_capacity(mixtures);
            let mut vars = Vec::with_capacity(mixtures);
            for m in 0..mixtures {
                let (n, line) = reader.next_line()?;
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.len() != 4 || tokens[0] != "mixture" || tokens[2] != "weight" {
                    return Err(Error::parse(path, n, "expected `mixture <m> weight <w>`"));
                }
                let idx: usize = tokens[1]
                    .parse()
                    .map_err(|_| Error::parse(path, n, "invalid mixture index"))?;
                if idx != m {
                    return Err(Error::parse(
                        path,
                        n,
                        format!("expected mixture {m}, found {idx}"),
                    ));
                }
                weights.push(parse_f64(tokens[3], path, n)?);
                means.push(reader.vector_line("mean", dim)?);
                vars.push(reader.vector_line("var", dim)?);
            }
            states.push(Gmm::new(weights, means, vars)?);
        }
        models.push(HmmModel::new(states, &self_p, &next_p)?);
    }
    let (n, last) = reader.next_line()?;
    if last != "end" {
        return Err(Error::parse(path, n, "expected `end`"));
    }

    let models: [HmmModel; EventClass::COUNT] = models
        .try_into()
        .expect("exactly six class models were parsed");
    let set = ModelSet {
        system_id,
        frame_period,
        frames_per_epoch,
        models: ClassMap(models),
    };
    set.validate()?;
    if set.dim() != dim {
        return Err(Error::DimMismatch {
            got: set.dim(),
            expected: dim,
        });
    }
    Ok(set)
}

fn parse_f64(token: &str, path: &Path, line: usize) -> Result<f64> {
    token
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid number `{token}`")))
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
    path: &'a Path,
}

impl<'a> Lines<'a> {
    /// Next line and its 1-based number.
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.path, self.pos + 1, "unexpected end of file"))?;
        self.pos += 1;
        Ok((self.pos, line.trim_end()))
    }

    /// Parse a `<key> <value>` line.
    fn keyed_value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, line) = self.next_line()?;
        let rest = line
            .strip_prefix(key)
            .map(str::trim)
            .filter(|rest| !rest.is_empty())
            .ok_or_else(|| Error::parse(self.path, n, format!("expected `{key} <value>`")))?;
        rest.parse()
            .map_err(|_| Error::parse(self.path, n, format!("invalid value for {key}: `{rest}`")))
    }

    /// Parse a `<key> <v0> <v1> ...` line with exactly `dim` values.
    fn vector_line(&mut self, key: &str, dim: usize) -> Result<Vec<f64>> {
        let (n, line) = self.next_line()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(key) {
            return Err(Error::parse(self.path, n, format!("expected `{key} ...`")));
        }
        let values: Vec<f64> = tokens
            .map(|t| parse_f64(t, self.path, n))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                self.path,
                n,
                format!("{key} has {} values, expected {dim}", values.len()),
            ));
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::train::{train_class, TrainSpec};

    fn trained_set() -> ModelSet {
        // Small but genuinely trained models so the file carries realistic
        // irrational floats.
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let models: Vec<HmmModel> = (0..6)
            .map(|c| {
                let epochs: Vec<Vec<Vec<f64>>> = (0..12)
                    .map(|_| {
                        (0..10)
                            .map(|_| {
                                vec![
                                    c as f64 * 2.0 + noise.sample(&mut rng),
                                    -(c as f64) + noise.sample(&mut rng),
                                ]
                            })
                            .collect()
                    })
                    .collect();
                let spec = TrainSpec {
                    num_states: 2,
                    num_mixtures: 2,
                    seed: c as u64,
                    ..TrainSpec::default()
                };
                train_class("t", &epochs, &spec).unwrap()
            })
            .collect();
        let models: [HmmModel; 6] = models.try_into().unwrap();
        ModelSet {
            system_id: 5,
            frame_period: 0.1,
            frames_per_epoch: 10,
            models: ClassMap(models),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models.txt");
        let set = trained_set();
        write_model_set(&path, &set).unwrap();
        let back = read_model_set(&path).unwrap();
        assert_eq!(back.system_id, set.system_id);
        assert_eq!(back.frame_period.to_bits(), set.frame_period.to_bits());
        assert_eq!(back.frames_per_epoch, set.frames_per_epoch);
        for (class, model) in set.models.iter() {
            let parsed = back.models.get(class);
            let (sa, na) = model.transition_probs();
            let (sb, nb) = parsed.transition_probs();
            for (a, b) in sa.iter().zip(&sb).chain(na.iter().zip(&nb)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            for (ga, gb) in model.states().iter().zip(parsed.states()) {
                for (a, b) in ga.weights().iter().zip(gb.weights()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
                for (ma, mb) in ga.means().iter().zip(gb.means()) {
                    for (a, b) in ma.iter().zip(mb) {
                        assert_eq!(a.to_bits(), b.to_bits());
                    }
                }
                for (va, vb) in ga.vars().iter().zip(gb.vars()) {
                    for (a, b) in va.iter().zip(vb) {
                        assert_eq!(a.to_bits(), b.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn classification_survives_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models.txt");
        let set = trained_set();
        write_model_set(&path, &set).unwrap();
        let back = read_model_set(&path).unwrap();
        let epoch: Vec<Vec<f64>> = (0..10).map(|t| vec![t as f64 * 0.5, 1.0]).collect();
        let a = set.classify(&epoch).unwrap();
        let b = back.classify(&epoch).unwrap();
        assert_eq!(a.label, b.label);
        assert_eq!(a.score.to_bits(), b.score.to_bits());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models.txt");
        std::fs::write(&path, "MODELSETv9\nsystem 1\n").unwrap();
        match read_model_set(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_is_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models.txt");
        let set = trained_set();
        write_model_set(&path, &set).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(20).collect();
        std::fs::write(&path, cut.join("\n")).unwrap();
        assert!(matches!(read_model_set(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn wrong_class_order_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models.txt");
        let set = trained_set();
        write_model_set(&path, &set).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("class SPSW", "class BCKG", 1);
        std::fs::write(&path, text).unwrap();
        match read_model_set(&path) {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("out of order"), "{message}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn garbled_numbers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("models.txt");
        let set = trained_set();
        write_model_set(&path, &set).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("frame_period", "frame_period x", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(read_model_set(&path), Err(Error::Parse { .. })));
    }
}

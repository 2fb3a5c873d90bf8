use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the square used by [`generate_rue`] when none is given.
pub const RUE_DEFAULT_EXTENT: f64 = 1_000_000.0;

/// Symmetric Euclidean TSP instance with TSPLIB `EUC_2D` distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub name: String,
    pub coords: Vec<(f64, f64)>,
}

impl TspInstance {
    pub fn new(name: impl Into<String>, coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::DegenerateTour(coords.len()));
        }
        if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Config("non-finite city coordinate".into()));
        }
        Ok(Self {
            name: name.into(),
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean distance rounded to the nearest integer.
    pub fn distance(&self, a: u32, b: u32) -> u64 {
        let (xa, ya) = self.coords[a as usize];
        let (xb, yb) = self.coords[b as usize];
        let (dx, dy) = (xa - xb, ya - yb);
        ((dx * dx + dy * dy).sqrt() + 0.5) as u64
    }

    pub fn tour_length(&self, tour: &[u32]) -> u64 {
        tour.iter()
            .zip(tour.iter().cycle().skip(1))
            .map(|(&a, &b)| self.distance(a, b))
            .sum()
    }
}

/// Parses the `EUC_2D` subset of the TSPLIB format.
pub fn parse_tsplib(text: &str) -> Result<TspInstance> {
    let mut name = String::from("unnamed");
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<String> = None;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut in_coords = false;
    let mut section_line = 0;
    let mut filled = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if in_coords {
            let first = line.split_whitespace().next().unwrap_or("");
            if first.parse::<f64>().is_err() {
                // Another section header ends the coordinate block.
                in_coords = false;
            } else {
                let dim = dimension.expect("checked when the section opened");
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(Error::parse(lineno, "expected `<id> <x> <y>`"));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad node id `{}`", fields[0])))?;
                let x: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad coordinate `{}`", fields[1])))?;
                let y: f64 = fields[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad coordinate `{}`", fields[2])))?;
                if id == 0 || id > dim {
                    return Err(Error::parse(
                        lineno,
                        format!("node id {id} outside 1..={dim}"),
                    ));
                }
                if coords[id - 1].replace((x, y)).is_some() {
                    return Err(Error::parse(lineno, format!("node {id} listed twice")));
                }
                filled += 1;
                continue;
            }
        }

        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, ""),
        };
        match key {
            "NAME" => name = value.to_string(),
            "TYPE" => {
                if value != "TSP" {
                    return Err(Error::parse(lineno, format!("unsupported TYPE `{value}`")));
                }
            }
            "DIMENSION" => {
                let d: usize = value
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad DIMENSION `{value}`")))?;
                dimension = Some(d);
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EUC_2D" {
                    return Err(Error::parse(
                        lineno,
                        format!("unsupported EDGE_WEIGHT_TYPE `{value}`"),
                    ));
                }
                weight_type = Some(value.to_string());
            }
            "NODE_COORD_SECTION" => {
                let Some(d) = dimension else {
                    return Err(Error::parse(lineno, "NODE_COORD_SECTION before DIMENSION"));
                };
                coords = vec![None; d];
                in_coords = true;
                section_line = lineno;
            }
            "COMMENT" | "NODE_COORD_TYPE" | "DISPLAY_DATA_TYPE" => {}
            other => {
                return Err(Error::parse(lineno, format!("unexpected keyword `{other}`")));
            }
        }
    }

    let last = text.lines().count();
    let dim = dimension.ok_or_else(|| Error::parse(last, "missing DIMENSION"))?;
    if weight_type.is_none() {
        return Err(Error::parse(last, "missing EDGE_WEIGHT_TYPE"));
    }
    if section_line == 0 {
        return Err(Error::parse(last, "missing NODE_COORD_SECTION"));
    }
    if filled != dim {
        return Err(Error::parse(
            section_line,
            format!("NODE_COORD_SECTION lists {filled} nodes, DIMENSION is {dim}"),
        ));
    }
    let coords = coords.into_iter().map(|c| c.expect("all filled")).collect();
    TspInstance::new(name, coords).map_err(|e| Error::parse(section_line, e.to_string()))
}

/// Random uniform instance: `dim` integer points on a square of side `extent`.
pub fn generate_rue(dim: usize, seed: u64, extent: f64) -> TspInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..dim)
        .map(|_| {
            let x = rng.gen_range(0.0..extent).floor();
            let y = rng.gen_range(0.0..extent).floor();
            (x, y)
        })
        .collect();
    TspInstance {
        name: format!("rue{dim}-{seed}"),
        coords,
    }
}

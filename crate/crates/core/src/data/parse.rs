use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Interaction, RatingBounds, RatingSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatingFormat {
    /// `user::item::rating::timestamp`, no header (MovieLens 1M/10M).
    MovielensDat,
    /// `user,item,rating[,timestamp]` with a header row.
    Csv,
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens-dat" => Ok(Self::MovielensDat),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!(
                "unknown rating format {other:?} (expected movielens-dat or csv)"
            ))),
        }
    }
}

impl fmt::Display for RatingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MovielensDat => "movielens-dat",
            Self::Csv => "csv",
        })
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    labels: Vec<String>,
}

impl Interner {
    fn get(&mut self, raw: &str) -> u32 {
        if let Some(&id) = self.ids.get(raw) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.ids.insert(raw.to_owned(), id);
        self.labels.push(raw.to_owned());
        id
    }
}

struct Builder<'a> {
    path: &'a Path,
    bounds: RatingBounds,
    users: Interner,
    items: Interner,
    interactions: Vec<Interaction>,
}

impl Builder<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn push(&mut self, line: usize, fields: &[&str]) -> Result<()> {
        if !(3..=4).contains(&fields.len()) {
            return Err(self.err(line, format!("expected 3 or 4 fields, found {}", fields.len())));
        }
        let (user, item) = (fields[0].trim(), fields[1].trim());
        if user.is_empty() || item.is_empty() {
            return Err(self.err(line, "empty user or item id"));
        }
        let rating: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| self.err(line, format!("bad rating {:?}", fields[2])))?;
        if !self.bounds.contains(rating) {
            return Err(self.err(
                line,
                format!("rating {rating} outside [{}, {}]", self.bounds.min, self.bounds.max),
            ));
        }
        let timestamp = match fields.get(3).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<i64>()
                    .map_err(|_| self.err(line, format!("bad timestamp {s:?}")))?,
            ),
        };
        let user = self.users.get(user);
        let item = self.items.get(item);
        self.interactions.push(Interaction {
            user,
            item,
            rating,
            timestamp,
        });
        Ok(())
    }

    fn finish(self) -> RatingSet {
        RatingSet {
            interactions: self.interactions,
            user_labels: self.users.labels,
            item_labels: self.items.labels,
            bounds: self.bounds,
        }
    }
}

/// Parses ratings from a reader. `path` is only used in error messages.
/// Original ids become labels; dense ids follow first appearance.
pub fn parse_ratings_from<R: Read>(
    reader: R,
    path: &Path,
    format: RatingFormat,
    bounds: RatingBounds,
) -> Result<RatingSet> {
    let mut b = Builder {
        path,
        bounds,
        users: Interner::default(),
        items: Interner::default(),
        interactions: Vec::new(),
    };
    match format {
        RatingFormat::MovielensDat => {
            for (idx, line) in BufReader::new(reader).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split("::").collect();
                b.push(idx + 1, &fields)?;
            }
        }
        RatingFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(reader);
            for record in rdr.records() {
                let record = record.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    b.err(line, e.to_string())
                })?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let fields: Vec<&str> = record.iter().collect();
                b.push(line, &fields)?;
            }
        }
    }
    Ok(b.finish())
}

pub fn parse_ratings(path: impl AsRef<Path>, format: RatingFormat, bounds: RatingBounds) -> Result<RatingSet> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = File::open(&path)?;
    parse_ratings_from(file, &path, format, bounds)
}

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Sequences derived from a price series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSeries {
    /// `r_t = price_t / price_{t−1} − 1`, one fewer than the prices.
    pub returns: Vec<f64>,
    /// `sign(r_t)`, with zero returns kept as `0`.
    pub bits: Sequence,
    /// Returns clipped to `[-1, 1]`.
    pub reals: Sequence,
    pub clip_count: usize,
    pub zero_count: usize,
}

/// Reads a `timestamp,price` CSV. Consecutive rows are consecutive steps;
/// gaps in the timestamps are not inspected.
pub fn ingest_prices<R: Read>(reader: R) -> Result<PriceSeries> {
    let prices = read_prices(reader)?;
    let mut returns = Vec::with_capacity(prices.len() - 1);
    let mut bits = Vec::with_capacity(prices.len() - 1);
    let mut reals = Vec::with_capacity(prices.len() - 1);
    let (mut clip_count, mut zero_count) = (0, 0);
    for w in prices.windows(2) {
        let r = w[1] / w[0] - 1.0;
        returns.push(r);
        bits.push(if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            zero_count += 1;
            0.0
        });
        if r.abs() > 1.0 {
            clip_count += 1;
        }
        reals.push(r.clamp(-1.0, 1.0));
    }
    Ok(PriceSeries {
        returns,
        bits: Sequence::new(bits)?,
        reals: Sequence::new(reals)?,
        clip_count,
        zero_count,
    })
}

/// [`ingest_prices`] on a file.
pub fn ingest_price_file(path: &Path) -> Result<PriceSeries> {
    ingest_prices(std::fs::File::open(path)?)
}

/// The `price` column, validated. Errors carry the 1-based file line.
pub fn read_prices<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(_), Some(price_col)) = (col("timestamp"), col("price")) else {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header with columns timestamp,price; got {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        });
    };
    let mut prices = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = rec.get(price_col).ok_or_else(|| Error::Parse {
            line,
            message: "missing price field".into(),
        })?;
        let p: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse price {field:?}"),
        })?;
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("price {p} is not positive"),
            });
        }
        prices.push(p);
    }
    if prices.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 price rows to form a return, got {}",
            prices.len()
        )));
    }
    Ok(prices)
}

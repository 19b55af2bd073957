//! CSV readers and writers for the daily, order, fill, FX, split and truth
//! files.
//!
//! Parse failures name the file, the line and the column.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use tickcost_core::market::{
    join_orders, normalize_daily, Fill, Order, OrderHeader, SecurityDay, SecurityId, Side, SplitRatio,
};
use tickcost_core::synth::TruthLabel;
use tickcost_core::{Date, Price};

use crate::error::{CliError, Result};

pub const DAILY_HEADER: [&str; 6] =
    ["security_id", "date", "close_yen", "avg_spread_yen", "volume_shares", "trade_count"];
pub const ORDERS_HEADER: [&str; 6] =
    ["order_id", "security_id", "side", "arrival_date", "arrival_price_yen", "total_shares"];
pub const FILLS_HEADER: [&str; 4] = ["order_id", "seq", "price_yen", "shares"];
pub const FX_HEADER: [&str; 2] = ["date", "usd_jpy"];
pub const SPLITS_HEADER: [&str; 3] = ["security_id", "ex_date", "ratio"];
pub const TRUTH_HEADER: [&str; 4] = ["order_id", "target_mi_bps", "target_mt_bps", "bucket_effect_bps"];

/// One data row with enough context to report a bad field.
pub struct Row<'a> {
    path: &'a Path,
    line: u64,
    header: &'a [&'a str],
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    pub fn line(&self) -> u64 {
        self.line
    }

    pub fn error(&self, column: &str, message: impl Display) -> CliError {
        CliError::Data(format!("{}:{}: column {column}: {message}", self.path.display(), self.line))
    }

    pub fn str(&self, column: &str) -> Result<&str> {
        let i = self.header.iter().position(|h| *h == column).expect("column in header");
        self.record.get(i).map(str::trim).ok_or_else(|| self.error(column, "missing field"))
    }

    pub fn parse<T: FromStr>(&self, column: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let s = self.str(column)?;
        s.parse::<T>().map_err(|e| self.error(column, format!("{s:?}: {e}")))
    }

    /// A finite float.
    pub fn float(&self, column: &str) -> Result<f64> {
        let v: f64 = self.parse(column)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(column, format!("{v} is not finite")))
        }
    }
}

/// Streams the rows of `path` after checking the header matches `header`.
pub fn read_table(path: &Path, header: &[&str], mut each: impl FnMut(&Row<'_>) -> Result<()>) -> Result<()> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != header {
        return Err(CliError::Data(format!(
            "{}:1: header {:?} does not match expected {:?}",
            path.display(),
            found.join(","),
            header.join(",")
        )));
    }
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => return Ok(()),
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != header.len() {
                    return Err(CliError::Data(format!(
                        "{}:{line}: expected {} fields, found {}",
                        path.display(),
                        header.len(),
                        record.len()
                    )));
                }
                each(&Row { path, line, header, record: &record })?;
            }
            Err(e) => return Err(csv_error(path, e)),
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(String::new(), |p| format!(":{}", p.line()));
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Data(format!("{}{line}: {other:?}", path.display())),
    }
}

pub fn read_daily(path: &Path) -> Result<Vec<SecurityDay>> {
    let mut out = Vec::new();
    read_table(path, &DAILY_HEADER, |r| {
        let close = r.float("close_yen")?;
        if close <= 0.0 {
            return Err(r.error("close_yen", format!("close price must be positive, got {close}")));
        }
        let day = SecurityDay::new(
            SecurityId::new(r.str("security_id")?),
            r.parse("date")?,
            close,
            r.float("avg_spread_yen")?,
            r.float("volume_shares")?,
            r.parse("trade_count")?,
        )
        .map_err(|e| r.error("security_id", e))?;
        out.push(day);
        Ok(())
    })?;
    normalize_daily(out).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_orders(orders_path: &Path, fills_path: &Path) -> Result<Vec<Order>> {
    let mut headers = Vec::new();
    read_table(orders_path, &ORDERS_HEADER, |r| {
        let price: Price = r.parse("arrival_price_yen")?;
        if !price.is_positive() {
            return Err(r.error("arrival_price_yen", "arrival price must be positive"));
        }
        headers.push(OrderHeader {
            order_id: r.str("order_id")?.to_string(),
            security_id: SecurityId::new(r.str("security_id")?),
            side: r.parse::<Side>("side")?,
            arrival_date: r.parse("arrival_date")?,
            arrival_price: price,
            total_shares: r.parse("total_shares")?,
        });
        Ok(())
    })?;
    let mut fills = Vec::new();
    read_table(fills_path, &FILLS_HEADER, |r| {
        fills.push((
            r.str("order_id")?.to_string(),
            Fill { seq: r.parse("seq")?, price: r.parse("price_yen")?, shares: r.parse("shares")? },
        ));
        Ok(())
    })?;
    join_orders(headers, fills).map_err(|e| CliError::Data(format!("{}: {e}", orders_path.display())))
}

pub fn read_fx(path: &Path) -> Result<Vec<(Date, f64)>> {
    let mut out = Vec::new();
    read_table(path, &FX_HEADER, |r| {
        let rate = r.float("usd_jpy")?;
        if rate <= 0.0 {
            return Err(r.error("usd_jpy", format!("rate must be positive, got {rate}")));
        }
        out.push((r.parse("date")?, rate));
        Ok(())
    })?;
    Ok(out)
}

pub fn read_splits(path: &Path) -> Result<Vec<SplitRatio>> {
    let mut out = Vec::new();
    read_table(path, &SPLITS_HEADER, |r| {
        let ratio = r.float("ratio")?;
        if ratio <= 0.0 {
            return Err(r.error("ratio", format!("ratio must be positive, got {ratio}")));
        }
        out.push(SplitRatio {
            security_id: SecurityId::new(r.str("security_id")?),
            ex_date: r.parse("ex_date")?,
            ratio,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthLabel>> {
    let mut out = Vec::new();
    read_table(path, &TRUTH_HEADER, |r| {
        out.push(TruthLabel {
            order_id: r.str("order_id")?.to_string(),
            target_mi_bps: r.float("target_mi_bps")?,
            target_mt_bps: r.float("target_mt_bps")?,
            bucket_effect_bps: r.float("bucket_effect_bps")?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Buffered CSV output that counts data rows.
pub struct TableWriter {
    path: std::path::PathBuf,
    out: BufWriter<File>,
    rows: usize,
}

impl TableWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<TableWriter> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = TableWriter { path: path.to_path_buf(), out: BufWriter::with_capacity(1 << 16, file), rows: 0 };
        w.write_line(header.iter())?;
        w.rows = 0;
        Ok(w)
    }

    fn write_line<I: IntoIterator<Item = T>, T: Display>(&mut self, fields: I) -> Result<()> {
        let mut first = true;
        for f in fields {
            if !first {
                self.out.write_all(b",").map_err(|e| CliError::io(&self.path, e))?;
            }
            first = false;
            let s = f.to_string();
            if s.contains([',', '"', '\n']) {
                write!(self.out, "\"{}\"", s.replace('"', "\"\"")).map_err(|e| CliError::io(&self.path, e))?;
            } else {
                self.out.write_all(s.as_bytes()).map_err(|e| CliError::io(&self.path, e))?;
            }
        }
        self.out.write_all(b"\n").map_err(|e| CliError::io(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn row<I: IntoIterator<Item = T>, T: Display>(&mut self, fields: I) -> Result<()> {
        self.write_line(fields)
    }

    /// Flushes and returns the number of data rows.
    pub fn finish(mut self) -> Result<usize> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.rows)
    }
}

/// Shortest round-trip form, switching to exponent notation for very
/// small or very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Empty for missing or non-finite values.
pub fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => num(x),
        _ => String::new(),
    }
}

pub fn write_daily(path: &Path, days: &[SecurityDay]) -> Result<usize> {
    let mut w = TableWriter::create(path, &DAILY_HEADER)?;
    for d in days {
        w.row([
            d.security_id.to_string(),
            d.date.to_string(),
            num(d.close_price),
            num(d.avg_spread),
            num(d.volume),
            d.trade_count.to_string(),
        ])?;
    }
    w.finish()
}

pub fn write_orders(orders_path: &Path, fills_path: &Path, orders: &[Order]) -> Result<(usize, usize)> {
    let mut w = TableWriter::create(orders_path, &ORDERS_HEADER)?;
    let mut f = TableWriter::create(fills_path, &FILLS_HEADER)?;
    for o in orders {
        w.row([
            o.order_id.clone(),
            o.security_id.to_string(),
            o.side.as_str().to_string(),
            o.arrival_date.to_string(),
            o.arrival_price.to_string(),
            o.total_shares.to_string(),
        ])?;
        for fill in &o.fills {
            f.row([o.order_id.clone(), fill.seq.to_string(), fill.price.to_string(), fill.shares.to_string()])?;
        }
    }
    Ok((w.finish()?, f.finish()?))
}

pub fn write_fx(path: &Path, fx: &[(Date, f64)]) -> Result<usize> {
    let mut w = TableWriter::create(path, &FX_HEADER)?;
    for (d, r) in fx {
        w.row([d.to_string(), num(*r)])?;
    }
    w.finish()
}

pub fn write_splits(path: &Path, splits: &[SplitRatio]) -> Result<usize> {
    let mut w = TableWriter::create(path, &SPLITS_HEADER)?;
    for s in splits {
        w.row([s.security_id.to_string(), s.ex_date.to_string(), s.ratio.to_string()])?;
    }
    w.finish()
}

pub fn write_truth(path: &Path, truth: &[TruthLabel]) -> Result<usize> {
    let mut w = TableWriter::create(path, &TRUTH_HEADER)?;
    for t in truth {
        w.row([t.order_id.clone(), num(t.target_mi_bps), num(t.target_mt_bps), num(t.bucket_effect_bps)])?;
    }
    w.finish()
}

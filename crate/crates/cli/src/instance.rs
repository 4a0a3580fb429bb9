//! Instance files: network, bids, and optional published prices and
//! surpluses to compare against.

use std::path::Path;

use coalloc_core::bids::validate;
use coalloc_core::network::LineSpec;
use coalloc_core::pricing::PriceSheet;
use coalloc_core::{Bid, BidBook, ClearingMode, Product, Topology};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "coalloc-instance";
pub const VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format: String,
    version: u32,
    zones: Vec<String>,
    slack: String,
    #[serde(default)]
    lines: Vec<LineEntry>,
    #[serde(default)]
    bids: Vec<BidEntry>,
    #[serde(default)]
    price_overrides: Vec<PriceOverride>,
    #[serde(default)]
    reported_surplus: Vec<ReportedSurplus>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineEntry {
    id: u32,
    from: String,
    to: String,
    #[serde(default = "unit_susceptance")]
    susceptance: f64,
    capacity: f64,
}

fn unit_susceptance() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BidEntry {
    id: Option<String>,
    product: String,
    zone: String,
    quantity: f64,
    price: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriceOverride {
    mode: String,
    zone: String,
    product: String,
    price: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportedSurplus {
    mode: String,
    bid: String,
    surplus: f64,
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: Topology,
    pub book: BidBook,
    overrides: Vec<(ClearingMode, String, Product, f64)>,
    reported: Vec<(ClearingMode, String, f64)>,
}

impl Instance {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError {
            message: format!("{}:{}", path.display(), e.message),
            ..e
        })
    }

    /// Parses instance text. Error messages start with `line:column: ` when
    /// the position is known.
    pub fn parse(text: &str) -> CliResult<Self> {
        let file: InstanceFile = toml::from_str(text).map_err(|e| {
            let (line, col) = e
                .span()
                .map(|span| line_col(text, span.start))
                .unwrap_or((1, 1));
            CliError::input(format!("{line}:{col}: {}", e.message()))
        })?;
        let here = |msg: String| CliError::input(format!(" {msg}"));

        if file.format != FORMAT || file.version != VERSION {
            return Err(here(format!(
                "unsupported format `{}` version {} (expected `{FORMAT}` version {VERSION})",
                file.format, file.version
            )));
        }
        let lines: Vec<LineSpec> = file
            .lines
            .iter()
            .map(|l| LineSpec::new(l.id, &l.from, &l.to, l.susceptance, l.capacity))
            .collect();
        let topology =
            Topology::new(&file.zones, &lines, &file.slack).map_err(|e| here(e.to_string()))?;

        let mut bids = Vec::with_capacity(file.bids.len());
        for (i, b) in file.bids.iter().enumerate() {
            let product = parse_product(&b.product).map_err(here)?;
            let id = b.id.clone().unwrap_or_else(|| format!("b{}", i + 1));
            bids.push(Bid::new(id, product, &b.zone, b.quantity, b.price));
        }
        let book = BidBook::new(bids);
        let report = validate(&book, &topology);
        if !report.is_valid() {
            return Err(here(format!("invalid bids: {report}")));
        }

        let mut overrides = Vec::new();
        for o in &file.price_overrides {
            let mode = parse_mode(&o.mode).map_err(here)?;
            let product = parse_product(&o.product).map_err(here)?;
            if topology.zone_index(&o.zone).is_none() {
                return Err(here(format!(
                    "price override names unknown zone `{}`",
                    o.zone
                )));
            }
            overrides.push((mode, o.zone.clone(), product, o.price));
        }
        let mut reported = Vec::new();
        for r in &file.reported_surplus {
            let mode = parse_mode(&r.mode).map_err(here)?;
            if book.position(&r.bid).is_none() {
                return Err(here(format!(
                    "reported surplus names unknown bid `{}`",
                    r.bid
                )));
            }
            reported.push((mode, r.bid.clone(), r.surplus));
        }

        Ok(Self {
            topology,
            book,
            overrides,
            reported,
        })
    }

    pub fn has_overrides(&self, mode: ClearingMode) -> bool {
        self.overrides.iter().any(|o| o.0 == mode)
    }

    /// Externally supplied prices for clearings in `mode`.
    pub fn external_prices(&self, mode: ClearingMode) -> PriceSheet {
        let mut sheet = PriceSheet::new();
        for (m, zone, product, price) in &self.overrides {
            if *m == mode {
                sheet.set_external(zone.clone(), *product, *price);
            }
        }
        sheet
    }

    pub fn reported_surpluses(&self, mode: ClearingMode) -> Vec<(String, f64)> {
        self.reported
            .iter()
            .filter(|r| r.0 == mode)
            .map(|r| (r.1.clone(), r.2))
            .collect()
    }
}

fn parse_product(s: &str) -> Result<Product, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<ClearingMode, String> {
    s.parse()
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

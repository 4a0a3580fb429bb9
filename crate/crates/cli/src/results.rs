//! Results files: a sequence of `## section` headers, each followed by a
//! comma-separated table with a header row. Floats are written in their
//! shortest round-trip form, so re-reading a file reproduces every value
//! bit for bit.

use std::collections::BTreeMap;

use coalloc_core::clearing::{RecoursePlan, WorstCaseReport};
use coalloc_core::pricing::{PriceInterval, PriceSheet, PriceSource, ZonalPrice};
use coalloc_core::{BidBook, ClearingMode, Product, Topology};

use crate::error::{CliError, CliResult};

pub const HEADER: &str = "# coalloc-results v1";

#[derive(Debug, Clone, PartialEq)]
pub struct PriceRow {
    pub zone: String,
    pub product: Product,
    pub lo: f64,
    pub hi: f64,
    pub settled: Option<f64>,
    pub source: PriceSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadRow {
    pub line: u32,
    pub direction: String,
    pub capacity: f64,
    pub load: f64,
    pub vertex: String,
    pub up: String,
    pub down: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Results {
    pub mode: ClearingMode,
    pub tsw: f64,
    pub deliverable: bool,
    pub acceptances: Vec<(String, f64)>,
    pub prices: Vec<PriceRow>,
    /// Worst-case loads with least-activation recourse only.
    pub worst_case: Vec<LoadRow>,
    /// Worst-case loads with congestion-relieving recourse.
    pub recourse: Vec<LoadRow>,
}

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::input(format!("invalid number `{s}` in {what}")))
}

fn parse_source(s: &str) -> CliResult<PriceSource> {
    match s {
        "merit-order" => Ok(PriceSource::MeritOrder),
        "dual" => Ok(PriceSource::Dual),
        "external" => Ok(PriceSource::External),
        other => Err(CliError::input(format!("unknown price source `{other}`"))),
    }
}

/// `A=4 B=2`, listing only nonzero activations.
pub fn format_activation(topology: &Topology, values: &[f64]) -> String {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(z, v)| format!("{}={}", topology.zone_id(z), format_f64(*v)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_rows(report: &WorstCaseReport, topology: &Topology) -> Vec<LoadRow> {
    report
        .entries
        .iter()
        .map(|e| {
            let plan = e
                .plan
                .clone()
                .unwrap_or_else(|| RecoursePlan::zero(topology.zones().len()));
            LoadRow {
                line: e.line_id,
                direction: e.direction.to_string(),
                capacity: e.capacity,
                load: e.load,
                vertex: e
                    .vertex
                    .map_or_else(|| "none".into(), |k| report.vertices[k].label(topology)),
                up: format_activation(topology, &plan.up),
                down: format_activation(topology, &plan.down),
            }
        })
        .collect()
}

pub fn price_rows(sheet: &PriceSheet) -> Vec<PriceRow> {
    sheet
        .iter()
        .map(|(zone, product, p)| PriceRow {
            zone: zone.to_string(),
            product,
            lo: p.interval.lo,
            hi: p.interval.hi,
            settled: p.settled,
            source: p.source,
        })
        .collect()
}

impl Results {
    pub fn price_sheet(&self) -> PriceSheet {
        let mut sheet = PriceSheet::new();
        for row in &self.prices {
            sheet.insert(
                row.zone.clone(),
                row.product,
                ZonalPrice {
                    interval: PriceInterval::new(row.lo, row.hi),
                    settled: row.settled,
                    source: row.source,
                },
            );
        }
        sheet
    }

    /// Acceptances in book order. Every bid must appear exactly once.
    pub fn acceptance_vector(&self, book: &BidBook) -> CliResult<Vec<f64>> {
        let mut by_id: BTreeMap<&str, f64> = BTreeMap::new();
        for (id, x) in &self.acceptances {
            if by_id.insert(id, *x).is_some() {
                return Err(CliError::input(format!(
                    "bid `{id}` appears twice in the results"
                )));
            }
            if book.position(id).is_none() {
                return Err(CliError::input(format!("results name unknown bid `{id}`")));
            }
        }
        book.bids()
            .iter()
            .map(|b| {
                by_id
                    .get(b.id.as_str())
                    .copied()
                    .ok_or_else(|| CliError::input(format!("results lack bid `{}`", b.id)))
            })
            .collect()
    }

    pub fn write(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');

        section(
            &mut out,
            "summary",
            &["key", "value"],
            vec![
                vec!["mode".into(), self.mode.to_string()],
                vec!["tsw".into(), format_f64(self.tsw)],
                vec!["deliverable".into(), self.deliverable.to_string()],
            ],
        );
        section(
            &mut out,
            "acceptances",
            &["bid", "x"],
            self.acceptances
                .iter()
                .map(|(id, x)| vec![id.clone(), format_f64(*x)])
                .collect(),
        );
        section(
            &mut out,
            "prices",
            &["zone", "product", "lo", "hi", "settled", "source"],
            self.prices
                .iter()
                .map(|p| {
                    vec![
                        p.zone.clone(),
                        p.product.to_string(),
                        format_f64(p.lo),
                        format_f64(p.hi),
                        p.settled.map(format_f64).unwrap_or_default(),
                        p.source.to_string(),
                    ]
                })
                .collect(),
        );
        for (name, rows) in [
            ("worst_case", &self.worst_case),
            ("recourse", &self.recourse),
        ] {
            section(
                &mut out,
                name,
                &[
                    "line",
                    "direction",
                    "capacity",
                    "load",
                    "vertex",
                    "up",
                    "down",
                ],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.line.to_string(),
                            r.direction.clone(),
                            format_f64(r.capacity),
                            format_f64(r.load),
                            r.vertex.clone(),
                            r.up.clone(),
                            r.down.clone(),
                        ]
                    })
                    .collect(),
            );
        }
        out
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let sections = split_sections(text)?;
        let table = |name: &str, header: &[&str]| -> CliResult<Vec<Vec<String>>> {
            let body = sections
                .get(name)
                .ok_or_else(|| CliError::input(format!("results lack section `{name}`")))?;
            read_table(name, body, header)
        };

        let mut summary = BTreeMap::new();
        for row in table("summary", &["key", "value"])? {
            summary.insert(row[0].clone(), row[1].clone());
        }
        let get = |key: &str| {
            summary
                .get(key)
                .ok_or_else(|| CliError::input(format!("summary lacks `{key}`")))
        };
        let mode: ClearingMode = get("mode")?.parse().map_err(CliError::input)?;
        let tsw = parse_f64(get("tsw")?, "summary")?;
        let deliverable = get("deliverable")?
            .parse()
            .map_err(|_| CliError::input("summary `deliverable` must be true or false"))?;

        let acceptances = table("acceptances", &["bid", "x"])?
            .into_iter()
            .map(|r| Ok((r[0].clone(), parse_f64(&r[1], "acceptances")?)))
            .collect::<CliResult<_>>()?;

        let prices = table(
            "prices",
            &["zone", "product", "lo", "hi", "settled", "source"],
        )?
        .into_iter()
        .map(|r| {
            Ok(PriceRow {
                zone: r[0].clone(),
                product: r[1].parse().map_err(CliError::input)?,
                lo: parse_f64(&r[2], "prices")?,
                hi: parse_f64(&r[3], "prices")?,
                settled: if r[4].is_empty() {
                    None
                } else {
                    Some(parse_f64(&r[4], "prices")?)
                },
                source: parse_source(&r[5])?,
            })
        })
        .collect::<CliResult<_>>()?;

        let loads = |name: &str| -> CliResult<Vec<LoadRow>> {
            table(
                name,
                &[
                    "line",
                    "direction",
                    "capacity",
                    "load",
                    "vertex",
                    "up",
                    "down",
                ],
            )?
            .into_iter()
            .map(|r| {
                Ok(LoadRow {
                    line: r[0]
                        .parse()
                        .map_err(|_| CliError::input(format!("invalid line id `{}`", r[0])))?,
                    direction: r[1].clone(),
                    capacity: parse_f64(&r[2], name)?,
                    load: parse_f64(&r[3], name)?,
                    vertex: r[4].clone(),
                    up: r[5].clone(),
                    down: r[6].clone(),
                })
            })
            .collect()
        };

        Ok(Self {
            mode,
            tsw,
            deliverable,
            acceptances,
            prices,
            worst_case: loads("worst_case")?,
            recourse: loads("recourse")?,
        })
    }
}

/// Appends `## name` and a CSV table.
pub fn section(out: &mut String, name: &str, header: &[&str], rows: Vec<Vec<String>>) {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    let body =
        String::from_utf8(writer.into_inner().expect("in-memory write")).expect("utf-8 input");
    out.push_str("## ");
    out.push_str(name);
    out.push('\n');
    out.push_str(&body);
}

fn split_sections(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(HEADER) {
        return Err(CliError::input(format!(
            "results must start with `{HEADER}`"
        )));
    }
    let mut sections = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    for line in lines {
        if let Some(name) = line.strip_prefix("## ") {
            if let Some((n, body)) = current.take() {
                sections.insert(n, body);
            }
            current = Some((name.trim().to_string(), String::new()));
        } else if let Some((_, body)) = current.as_mut() {
            body.push_str(line);
            body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(CliError::input("results content before the first section"));
        }
    }
    if let Some((n, body)) = current {
        sections.insert(n, body);
    }
    Ok(sections)
}

fn read_table(name: &str, body: &str, header: &[&str]) -> CliResult<Vec<Vec<String>>> {
    let bad = |e: csv::Error| CliError::input(format!("section `{name}`: {e}"));
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let found: Vec<String> = reader
        .headers()
        .map_err(bad)?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(CliError::input(format!(
            "section `{name}` has columns {found:?}, expected {header:?}"
        )));
    }
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(bad)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Results {
        Results {
            mode: ClearingMode::Balanced,
            tsw: 76.00000000000001,
            deliverable: true,
            acceptances: vec![("a".into(), 0.1 + 0.2), ("b".into(), 1e-300)],
            prices: vec![PriceRow {
                zone: "A".into(),
                product: Product::ReserveNeg,
                lo: f64::NEG_INFINITY,
                hi: 12.0,
                settled: None,
                source: PriceSource::Dual,
            }],
            worst_case: vec![LoadRow {
                line: 4,
                direction: "+".into(),
                capacity: 2.0,
                load: 3.0,
                vertex: "B+".into(),
                up: "A=4 B=2".into(),
                down: String::new(),
            }],
            recourse: Vec::new(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let r = sample();
        let text = r.write();
        let back = Results::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.acceptances[0].1.to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back.write(), text);
    }

    #[test]
    fn missing_section_is_an_input_error() {
        let text = sample().write().replace("## recourse", "## other");
        let err = Results::parse(&text).unwrap_err();
        assert!(err.message.contains("recourse"));
    }

    #[test]
    fn header_is_required() {
        assert!(Results::parse("## summary\nkey,value\n").is_err());
    }
}

//! Synthetic accident files in the 2013 layout, for dataset-free runs.
//!
//! The injury label is drawn from `σ(BASE_LOGIT + signal · s(x))` where
//! `s` depends only on the MOTO count and the TIPO_ACID category, so
//! `signal = 0` gives labels independent of every feature. Casualty columns
//! are then filled in to agree with the label, and the leak columns (UPS in
//! particular) encode it outright; they must never reach a design matrix.

use chrono::{Datelike, NaiveDate, Weekday};
use rand_chacha::ChaCha8Rng;
use riskml_core::dataset::Schema;
use riskml_core::linear::sigmoid;
use riskml_core::rng::{below, shuffle, stream, unit};

use crate::error::{CliError, CliResult};

pub const MIN_ROWS: usize = 10;

/// Injury log-odds when the planted signal is off (about 31% injuries).
const BASE_LOGIT: f64 = -0.8;

const TIPOS: [(&str, f64, f64); 9] = [
    // (category, frequency weight, log-odds contribution)
    ("ABALROAMENTO", 42.0, -2.5),
    ("COLISAO", 22.0, -1.5),
    ("CHOQUE", 12.0, -1.0),
    ("ATROPELAMENTO", 8.0, 5.0),
    ("EVENTUAL", 6.0, -0.5),
    ("QUEDA", 4.0, 4.5),
    ("CAPOTAGEM", 2.0, 2.0),
    ("TOMBAMENTO", 2.0, 1.5),
    ("INCENDIO", 2.0, -3.0),
];

const MOTO_WEIGHT: f64 = 3.5;

const DIAS: [&str; 7] = [
    "SEGUNDA-FEIRA",
    "TERCA-FEIRA",
    "QUARTA-FEIRA",
    "QUINTA-FEIRA",
    "SEXTA-FEIRA",
    "SABADO",
    "DOMINGO",
];

const BAD_DATES: [&str; 4] = ["2013-02-30 10:00", "31/13/2013", "", "2013-06-15 25:70"];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[below(rng, items.len())]
}

fn weighted<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, f64)]) -> T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut u = unit(rng) * total;
    for &(item, w) in items {
        if u < w {
            return item;
        }
        u -= w;
    }
    items[items.len() - 1].0
}

fn weekday_name(day: Weekday) -> &'static str {
    DIAS[day.num_days_from_monday() as usize]
}

struct Record {
    cells: Vec<(&'static str, String)>,
}

impl Record {
    fn set(&mut self, name: &'static str, value: impl Into<String>) {
        self.cells.push((name, value.into()));
    }
}

fn record(rng: &mut ChaCha8Rng, index: usize, signal: f64, bad_date: Option<&str>) -> Record {
    let mut r = Record { cells: Vec::new() };
    let day = NaiveDate::from_yo_opt(2013, 1 + below(rng, 365) as u32).expect("valid ordinal");
    let hour = below(rng, 24);
    let minute = below(rng, 60);
    match bad_date {
        Some(bad) => r.set("DATA_HORA", bad),
        None => r.set("DATA_HORA", format!("{} {hour:02}:{minute:02}", day.format("%Y-%m-%d"))),
    }

    let moto = weighted(rng, &[(0u32, 70.0), (1, 25.0), (2, 5.0)]);
    let tipo_weights: Vec<(usize, f64)> = TIPOS.iter().enumerate().map(|(i, t)| (i, t.1)).collect();
    let tipo = weighted(rng, &tipo_weights);
    let score = MOTO_WEIGHT * f64::from(moto) + TIPOS[tipo].2;
    let injured = unit(rng) < sigmoid(BASE_LOGIT + signal * score);

    r.set("AUTO", weighted(rng, &[(0u32, 25.0), (1, 45.0), (2, 30.0)]).to_string());
    r.set("TAXI", u8::from(below(rng, 12) == 0).to_string());
    r.set("LOTACAO", u8::from(below(rng, 40) == 0).to_string());
    r.set("ONIBUS_URB", u8::from(below(rng, 10) == 0).to_string());
    r.set("ONIBUS_MET", u8::from(below(rng, 60) == 0).to_string());
    r.set("CAMINHAO", u8::from(below(rng, 9) == 0).to_string());
    r.set("MOTO", moto.to_string());
    r.set("CARROCA", u8::from(below(rng, 300) == 0).to_string());
    r.set("BICICLETA", u8::from(below(rng, 50) == 0).to_string());
    r.set("OUTRO", u8::from(below(rng, 100) == 0).to_string());

    r.set("LOCAL", pick(rng, &["Logradouro", "Cruzamento"]));
    r.set("TIPO_ACID", TIPOS[tipo].0);
    r.set("DIA_SEM", weekday_name(day.weekday()));
    r.set("CONSORCIO", pick(rng, &["STS", "CARRIS", "MOB", "N/INFORMADO"]));
    // A few empty weather cells exercise the missing-category rule.
    let tempo = if below(rng, 50) == 0 {
        ""
    } else {
        pick(rng, &["BOM", "CHUVOSO", "NUBLADO"])
    };
    r.set("TEMPO", tempo);
    r.set("NOITE_DIA", if (6..18).contains(&hour) { "DIA" } else { "NOITE" });
    r.set("MES", day.month().to_string());
    r.set("FX_HORA", hour.to_string());
    r.set("CORREDOR", u8::from(below(rng, 8) == 0).to_string());

    let (mut feridos, mut graves, mut mortes, mut post) = (0u32, 0u32, 0u32, 0u32);
    if injured {
        match below(rng, 100) {
            0..=2 => mortes = 1,
            3..=4 => post = 1,
            5..=19 => graves = 1,
            _ => feridos = 1 + below(rng, 2) as u32,
        }
    }
    r.set("FERIDOS", feridos.to_string());
    r.set("FERIDOS_GR", graves.to_string());
    r.set("MORTES", mortes.to_string());
    r.set("MORTES_POST", post.to_string());
    r.set("FATAIS", (mortes + post).to_string());

    r.set("ID", (index + 1).to_string());
    r.set("BOLETIM", format!("{:08}", 13_000_000 + index));
    r.set("FONTE", pick(rng, &["EPTC", "BM"]));
    let ups = if mortes + post > 0 {
        13
    } else if injured {
        5
    } else {
        1
    };
    r.set("UPS", ups.to_string());

    const STREETS: [&str; 6] = [
        "AV IPIRANGA",
        "AV BENTO GONCALVES",
        "AV PROTASIO ALVES",
        "R DOS ANDRADAS",
        "AV ASSIS BRASIL",
        "AV CRISTOVAO COLOMBO",
    ];
    r.set("LOG1", pick(rng, &STREETS));
    r.set("LOG2", pick(rng, &STREETS));
    r.set("PREDIAL1", (below(rng, 5000) + 1).to_string());
    r.set("LATITUDE", format!("{:.6}", -30.0 - 0.2 * unit(rng)));
    r.set("LONGITUDE", format!("{:.6}", -51.1 - 0.15 * unit(rng)));
    r.set(
        "LOCAL_VIA",
        format!("{} - {}", pick(rng, &STREETS), below(rng, 900) + 1),
    );
    r.set("REGIAO", pick(rng, &["NORTE", "SUL", "LESTE", "CENTRO"]));
    r
}

/// Renders an `n`-row fixture. At most 1% of rows (and at least one) carry
/// a malformed date.
pub fn generate(n: usize, signal: f64, seed: u64) -> CliResult<String> {
    if n < MIN_ROWS {
        return Err(CliError::Config(format!(
            "synth needs at least {MIN_ROWS} rows, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&signal) {
        return Err(CliError::Config(format!("signal {signal} must lie in [0, 1]")));
    }
    let schema = Schema::default();
    let mut rng = stream(seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut rng, &mut order);
    let mut bad = vec![None; n];
    for (j, &row) in order.iter().take((n / 100).max(1)).enumerate() {
        bad[row] = Some(BAD_DATES[j % BAD_DATES.len()]);
    }

    let header: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    let mut out = header.join(";");
    out.push('\n');
    for (i, bad_date) in bad.iter().enumerate() {
        let rec = record(&mut rng, i, signal, *bad_date);
        let line: Vec<&str> = header
            .iter()
            .map(|name| {
                rec.cells
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v.as_str())
                    .expect("every schema column is generated")
            })
            .collect();
        out.push_str(&line.join(";"));
        out.push('\n');
    }
    Ok(out)
}

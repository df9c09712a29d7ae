//! Seeded synthetic data: a planted-signal classification set with known
//! informative features, and a small table in the raw US-Accidents layout.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::prep::{LESS_SEVERE, SEVERE, SEVERITY};
use crate::rng::stream;
use crate::table::{Column, ColumnTable};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub rows: usize,
    pub informative: usize,
    pub noise: usize,
    /// Class-conditional mean shift of each informative feature, in units of
    /// its standard deviation.
    pub shift: f64,
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            rows: 5_000,
            informative: 3,
            noise: 10,
            shift: 2.0,
            positive_rate: 0.3,
            seed: 1,
        }
    }
}

impl PlantedConfig {
    pub fn informative_names(&self) -> Vec<String> {
        (1..=self.informative)
            .map(|i| format!("signal_{i}"))
            .collect()
    }

    pub fn noise_names(&self) -> Vec<String> {
        (1..=self.noise).map(|i| format!("noise_{i}")).collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.informative_names();
        names.extend(self.noise_names());
        names
    }
}

/// Features are unit-variance normals; informative ones have mean `shift`
/// in the `severe` class and 0 otherwise. The target column is `Severity`.
pub fn planted_signal(cfg: &PlantedConfig) -> ColumnTable {
    let mut label_rng = stream(cfg.seed, 0);
    let severe: Vec<bool> = (0..cfg.rows)
        .map(|_| label_rng.random_bool(cfg.positive_rate))
        .collect();
    let mut columns = Vec::with_capacity(cfg.informative + cfg.noise + 1);
    for (j, name) in cfg.feature_names().into_iter().enumerate() {
        let mut rng = stream(cfg.seed, j as u64 + 1);
        let shift = if j < cfg.informative { cfg.shift } else { 0.0 };
        let values = severe
            .iter()
            .map(|&s| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Some(if s { z + shift } else { z })
            })
            .collect();
        columns.push(Column::numeric(name, values));
    }
    columns.push(Column::categorical(
        SEVERITY,
        severe
            .iter()
            .map(|&s| Some(if s { SEVERE } else { LESS_SEVERE }.to_string()))
            .collect(),
    ));
    ColumnTable::new(columns).expect("equal-length columns")
}

const POI: [&str; 13] = [
    "Amenity",
    "Bump",
    "Crossing",
    "Give_Way",
    "Junction",
    "No_Exit",
    "Railway",
    "Roundabout",
    "Station",
    "Stop",
    "Traffic_Calming",
    "Traffic_Signal",
    "Turning_Loop",
];

const POI_RATE: [f64; 13] = [
    0.012, 0.001, 0.08, 0.005, 0.1, 0.002, 0.01, 0.0005, 0.03, 0.03, 0.001, 0.15, 0.0,
];

const TWILIGHT: [&str; 4] = [
    "Sunrise_Sunset",
    "Civil_Twilight",
    "Nautical_Twilight",
    "Astronomical_Twilight",
];

const CONDITIONS: [(&str, f64); 14] = [
    ("Fair", 0.40),
    ("Clear", 0.08),
    ("Mostly Cloudy", 0.12),
    ("Partly Cloudy", 0.09),
    ("Overcast", 0.08),
    ("Cloudy", 0.06),
    ("Light Rain", 0.05),
    ("Rain", 0.02),
    ("Heavy Rain", 0.01),
    ("Thunderstorm", 0.005),
    ("Light Snow", 0.01),
    ("Heavy Snow", 0.003),
    ("Fog", 0.02),
    ("Haze", 0.022),
];

const WIND: [&str; 22] = [
    "Calm", "CALM", "North", "N", "NNE", "NE", "ENE", "East", "E", "ESE", "SE", "SSE", "South",
    "S", "SSW", "SW", "WSW", "West", "W", "WNW", "NW", "Variable",
];

const STATES: [(&str, f64); 5] = [
    ("CA", 0.7),
    ("FL", 0.1),
    ("TX", 0.08),
    ("OR", 0.07),
    ("NY", 0.05),
];

const COUNTIES: [&str; 6] = [
    "Los Angeles",
    "San Diego",
    "Orange",
    "Alameda",
    "Sacramento",
    "Kern",
];

fn pick<'a, R: Rng>(rng: &mut R, weighted: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = weighted.iter().map(|w| w.1).sum();
    let mut u = rng.random::<f64>() * total;
    for &(v, w) in weighted {
        if u < w {
            return v;
        }
        u -= w;
    }
    weighted.last().expect("non-empty").0
}

fn maybe<T, R: Rng>(rng: &mut R, p_missing: f64, v: T) -> Option<T> {
    (!rng.random_bool(p_missing)).then_some(v)
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

/// Raw accident records in the public US-Accidents column layout, with the
/// usual missingness and mixed wind spellings. Severity depends on wind
/// speed, visibility, pressure, humidity and clear weather.
pub fn accident_fixture(rows: usize, seed: u64) -> ColumnTable {
    let mut rng = stream(seed, 0);
    let normal = |m: f64, s: f64| Normal::new(m, s).expect("positive sd");
    let temp_d = normal(64.0, 14.0);
    let hum_d = normal(62.0, 20.0);
    let pres_d = normal(29.8, 0.35);
    let wind_d = normal(7.5, 4.5);

    let mut text: Vec<(&str, Vec<Option<String>>)> = [
        "ID",
        "Start_Time",
        "End_Time",
        "Description",
        "Street_Number",
        "Side",
        "City",
        "County",
        "State",
        "Zipcode",
        "Country",
        "Timezone",
        "Airport_Code",
        "Weather_Timestamp",
        "Wind_Direction",
        "Weather_Condition",
    ]
    .into_iter()
    .map(|n| (n, Vec::with_capacity(rows)))
    .collect();
    let num_names = [
        "Start_Lat",
        "Start_Lng",
        "End_Lat",
        "End_Lng",
        "Distance(mi)",
        "Temperature(F)",
        "Wind_Chill(F)",
        "Humidity(%)",
        "Pressure(in)",
        "Visibility(mi)",
        "Wind_Speed(mph)",
        "Precipitation(in)",
    ];
    let mut num: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows); num_names.len()];
    let mut poi: Vec<Vec<Option<bool>>> = vec![Vec::with_capacity(rows); POI.len()];
    let mut twilight: Vec<Vec<Option<String>>> = vec![Vec::with_capacity(rows); TWILIGHT.len()];
    let mut severity = Vec::with_capacity(rows);

    for i in 0..rows {
        let year = 2016 + (i % 6) as i32;
        let month = rng.random_range(1..=12u32);
        let day = rng.random_range(1..=28u32);
        let (hour, minute, sec) = (
            rng.random_range(0..24u32),
            rng.random_range(0..60u32),
            rng.random_range(0..60u32),
        );
        let frac = if i % 17 == 0 { ".000000000" } else { "" };
        let start = format!("{year}-{month:02}-{day:02} {hour:02}:{minute:02}:{sec:02}{frac}");
        let end_hour = (hour + 1) % 24;
        let end = format!("{year}-{month:02}-{day:02} {end_hour:02}:{minute:02}:{sec:02}");

        let condition = pick(&mut rng, &CONDITIONS);
        let clear = matches!(condition, "Fair" | "Clear");
        let temp = round_to(temp_d.sample(&mut rng), 0.1);
        let humidity = hum_d.sample(&mut rng).clamp(5.0, 100.0).round();
        let pressure = round_to(pres_d.sample(&mut rng), 0.01);
        let visibility = if clear {
            10.0
        } else {
            round_to(rng.random_range(0.2..10.0), 0.1)
        };
        let wind = wind_d.sample(&mut rng).max(0.0).round();
        let precip = if clear {
            0.0
        } else {
            round_to(rng.random_range(0.0..0.3), 0.01)
        };

        let latent = 0.18 * (wind - 7.5) - 0.25 * (visibility - 8.0) - 2.0 * (pressure - 29.8)
            + 0.02 * (humidity - 62.0)
            - if clear { 0.8 } else { 0.0 }
            + 0.6 * rng.sample::<f64, _>(StandardNormal)
            - 1.3;
        let sev = if latent > 0.9 {
            4
        } else if latent > 0.0 {
            3
        } else if rng.random_bool(0.1) {
            1
        } else {
            2
        };
        severity.push(Some(f64::from(sev)));

        let lat = 32.5 + rng.random::<f64>() * 9.5;
        let lng = -124.0 + rng.random::<f64>() * 9.5;
        let dist = round_to(rng.random::<f64>() * 2.0, 0.001);
        let values = [
            Some(lat),
            Some(lng),
            maybe(&mut rng, 0.4, lat + 0.001),
            maybe(&mut rng, 0.4, lng + 0.001),
            Some(dist),
            maybe(&mut rng, 0.02, temp),
            maybe(&mut rng, 0.16, round_to(temp - wind * 0.3, 0.1)),
            maybe(&mut rng, 0.02, humidity),
            maybe(&mut rng, 0.02, pressure),
            maybe(&mut rng, 0.02, visibility),
            maybe(&mut rng, 0.05, wind),
            maybe(&mut rng, 0.19, precip),
        ];
        for (c, v) in num.iter_mut().zip(values) {
            c.push(v);
        }
        for (c, &p) in poi.iter_mut().zip(POI_RATE.iter()) {
            c.push(Some(rng.random_bool(p)));
        }
        let night = !(6..18).contains(&hour);
        let twilight_missing = rng.random_bool(0.003);
        for (k, c) in twilight.iter_mut().enumerate() {
            let dark = night && (hour + k as u32) % 24 != 6;
            let v = if dark { "Night" } else { "Day" };
            c.push((!twilight_missing).then(|| v.to_string()));
        }

        let state = pick(&mut rng, &STATES);
        let street_number = rng.random_range(1..9999).to_string();
        let wind_dir = WIND[rng.random_range(0..WIND.len())].to_string();
        let texts = [
            Some(format!("A-{}", i + 1)),
            Some(start.clone()),
            Some(end),
            Some(format!("Incident on route {}", rng.random_range(1..400))),
            maybe(&mut rng, 0.6, street_number),
            Some(if rng.random_bool(0.8) { "R" } else { "L" }.to_string()),
            Some("Springfield".to_string()),
            Some(COUNTIES[rng.random_range(0..COUNTIES.len())].to_string()),
            Some(state.to_string()),
            Some(format!("9{:04}", rng.random_range(0..9999))),
            Some("US".to_string()),
            maybe(&mut rng, 0.001, "US/Pacific".to_string()),
            Some("KLAX".to_string()),
            Some(start),
            maybe(&mut rng, 0.02, wind_dir),
            maybe(&mut rng, 0.02, condition.to_string()),
        ];
        for (c, v) in text.iter_mut().zip(texts) {
            c.1.push(v);
        }
    }

    let text_col = |text: &mut Vec<(&str, Vec<Option<String>>)>, name: &str| {
        let idx = text.iter().position(|c| c.0 == name).expect("known column");
        let (n, v) = text.remove(idx);
        Column::categorical(n, v)
    };
    let num_col = |num: &mut Vec<Vec<Option<f64>>>, name: &str| {
        let idx = num_names
            .iter()
            .position(|&n| n == name)
            .expect("known column");
        Column::numeric(name, std::mem::take(&mut num[idx]))
    };

    let mut columns = vec![
        text_col(&mut text, "ID"),
        Column::numeric(SEVERITY, severity),
        text_col(&mut text, "Start_Time"),
        text_col(&mut text, "End_Time"),
    ];
    for n in [
        "Start_Lat",
        "Start_Lng",
        "End_Lat",
        "End_Lng",
        "Distance(mi)",
    ] {
        columns.push(num_col(&mut num, n));
    }
    for n in [
        "Description",
        "Street_Number",
        "Side",
        "City",
        "County",
        "State",
        "Zipcode",
        "Country",
        "Timezone",
        "Airport_Code",
        "Weather_Timestamp",
    ] {
        columns.push(text_col(&mut text, n));
    }
    for n in [
        "Temperature(F)",
        "Wind_Chill(F)",
        "Humidity(%)",
        "Pressure(in)",
        "Visibility(mi)",
    ] {
        columns.push(num_col(&mut num, n));
    }
    columns.push(text_col(&mut text, "Wind_Direction"));
    for n in ["Wind_Speed(mph)", "Precipitation(in)"] {
        columns.push(num_col(&mut num, n));
    }
    columns.push(text_col(&mut text, "Weather_Condition"));
    for (name, v) in POI.iter().zip(poi) {
        columns.push(Column::boolean(*name, v));
    }
    for (name, v) in TWILIGHT.iter().zip(twilight) {
        columns.push(Column::categorical(*name, v));
    }
    ColumnTable::new(columns).expect("equal-length columns")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnKind;

    #[test]
    fn planted_is_seeded_and_shifted() {
        let cfg = PlantedConfig {
            rows: 2_000,
            ..PlantedConfig::default()
        };
        let a = planted_signal(&cfg);
        assert_eq!(a, planted_signal(&cfg));
        assert_eq!(a.n_columns(), 14);
        let sev = a.column(SEVERITY).unwrap().as_text().unwrap();
        let mean = |name: &str, class: &str| {
            let x = a.column(name).unwrap().as_numeric().unwrap();
            let v: Vec<f64> = x
                .iter()
                .zip(sev)
                .filter(|(_, s)| s.as_deref() == Some(class))
                .map(|(x, _)| x.unwrap())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let d = mean("signal_1", SEVERE) - mean("signal_1", LESS_SEVERE);
        assert!((d - 2.0).abs() < 0.2, "{d}");
        let d = mean("noise_1", SEVERE) - mean("noise_1", LESS_SEVERE);
        assert!(d.abs() < 0.2, "{d}");
    }

    #[test]
    fn fixture_layout() {
        let t = accident_fixture(300, 7);
        assert_eq!(t.row_count(), 300);
        assert_eq!(t.column(SEVERITY).unwrap().kind(), ColumnKind::Numeric);
        assert_eq!(t.column("Amenity").unwrap().kind(), ColumnKind::Boolean);
        assert!(t.column("Precipitation(in)").unwrap().n_missing() > 20);
        assert_eq!(t, accident_fixture(300, 7));
    }
}

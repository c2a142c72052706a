//! Deterministic text pattern rules shared by the stages: temporal cues,
//! coordinates, place names, entities and keyword extraction.

use std::sync::OnceLock;

use chrono::{NaiveDate, NaiveTime};
use regex::Regex;
use serde::{Deserialize, Serialize};

/// A WGS-84 coordinate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Returns `None` when either component is out of range or not finite.
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let ok = lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon);
        ok.then_some(Self { lat, lon })
    }

    pub fn is_valid(&self) -> bool {
        Self::new(self.lat, self.lon).is_some()
    }

    /// Great-circle distance in kilometres.
    pub fn distance_km(&self, other: &GeoPoint) -> f64 {
        const EARTH_RADIUS_KM: f64 = 6371.0088;
        let (p1, p2) = (self.lat.to_radians(), other.lat.to_radians());
        let dp = p2 - p1;
        let dl = (other.lon - self.lon).to_radians();
        let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
    }
}

/// Dates, times and the raw strings they were read from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemporalCues {
    pub dates: Vec<NaiveDate>,
    pub times: Vec<NaiveTime>,
    pub cues: Vec<String>,
}

impl TemporalCues {
    pub fn is_empty(&self) -> bool {
        self.dates.is_empty() && self.times.is_empty()
    }
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

const WEEKDAYS: [&str; 7] = [
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
];

const DAYLIGHT_WORDS: [&str; 9] = [
    "morning",
    "evening",
    "night",
    "nighttime",
    "daytime",
    "dawn",
    "dusk",
    "sunset",
    "sunrise",
];

/// Built-in gazetteer. Small on purpose: place recognition also uses
/// street-type tokens and locative prepositions.
const GAZETTEER: &[&str] = &[
    "Afghanistan",
    "Aleppo",
    "Amsterdam",
    "Ankara",
    "Athens",
    "Baghdad",
    "Bakhmut",
    "Bangkok",
    "Beirut",
    "Belarus",
    "Belgorod",
    "Berlin",
    "Brussels",
    "Cairo",
    "Chernihiv",
    "Damascus",
    "Delhi",
    "Dnipro",
    "Donetsk",
    "Gaza",
    "Hanoi",
    "Istanbul",
    "Iran",
    "Iraq",
    "Israel",
    "Jakarta",
    "Jerusalem",
    "Kabul",
    "Kharkiv",
    "Kherson",
    "Kramatorsk",
    "Kyiv",
    "Lebanon",
    "London",
    "Luhansk",
    "Lviv",
    "Madrid",
    "Manila",
    "Mariupol",
    "Melitopol",
    "Moscow",
    "Mykolaiv",
    "Nairobi",
    "New York",
    "Odesa",
    "Paris",
    "Poland",
    "Rafah",
    "Rome",
    "Russia",
    "Sumy",
    "Syria",
    "Taiwan",
    "Tehran",
    "Tel Aviv",
    "Tokyo",
    "Turkey",
    "Ukraine",
    "Vietnam",
    "Warsaw",
    "Washington",
    "Zaporizhzhia",
    "Zhytomyr",
];

const STREET_TOKENS: &[&str] = &[
    "avenue",
    "ave",
    "boulevard",
    "bridge",
    "embankment",
    "highway",
    "lane",
    "naberezhna",
    "plaza",
    "prospekt",
    "road",
    "square",
    "street",
    "vulytsia",
    "ploshcha",
];

const ROLE_WORDS: &[&str] = &[
    "army",
    "eyewitness",
    "eyewitnesses",
    "forces",
    "government",
    "journalist",
    "journalists",
    "military",
    "ministry",
    "occupants",
    "officials",
    "police",
    "president",
    "reporter",
    "reporters",
    "residents",
    "soldiers",
    "witnesses",
];

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "before", "being", "by",
    "can", "did", "does", "during", "for", "from", "had", "has", "have", "he", "her", "his", "how", "if", "in", "into",
    "is", "it", "its", "may", "near", "not", "of", "on", "or", "our", "over", "shows", "she", "so", "some", "than",
    "that", "the", "their", "them", "then", "there", "these", "they", "this", "those", "through", "to", "up", "was",
    "we", "were", "what", "when", "where", "which", "while", "who", "why", "will", "with", "would", "you",
];

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

fn iso_date_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"\b(\d{4})[-:](\d{2})[-:](\d{2})\b")
}

fn dmy_date_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"\b(\d{1,2})[/.](\d{1,2})[/.](\d{4})\b")
}

fn day_month_name_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(
        &R,
        r"(?i)\b(\d{1,2})(?:st|nd|rd|th)?\s+(january|february|march|april|may|june|july|august|september|october|november|december)\s*,?\s+(\d{4})\b",
    )
}

fn month_name_day_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(
        &R,
        r"(?i)\b(january|february|march|april|may|june|july|august|september|october|november|december)\s+(\d{1,2})(?:st|nd|rd|th)?\s*,?\s+(\d{4})\b",
    )
}

fn time_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"\b([01]?\d|2[0-3]):([0-5]\d)(?::([0-5]\d))?\b")
}

fn hemisphere_coord_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(
        &R,
        r"(\d{1,2}(?:\.\d+)?)\s*°?\s*([NSns])\s*,?\s*(\d{1,3}(?:\.\d+)?)\s*°?\s*([EWew])\b",
    )
}

fn decimal_coord_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"(-?\d{1,2}\.\d{3,})\s*,\s*(-?\d{1,3}\.\d{3,})")
}

fn token_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"[\p{L}\p{N}@#](?:[\p{L}\p{N}/:.'\-]*[\p{L}\p{N}])?")
}

fn capitalized_run_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"\b\p{Lu}[\p{L}'\-]+(?:\s+\p{Lu}[\p{L}'\-]+)*")
}

fn locative_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(
        &R,
        r"\b(?:in|at|near|outside|around)\s+(\p{Lu}[\p{L}'\-]+(?:\s+\p{Lu}[\p{L}'\-]+)*)",
    )
}

fn handle_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"@[A-Za-z0-9_]{2,}")
}

fn byline_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(
        &R,
        r"(?i)\b(?:by|reported by|filmed by|captured by|posted by|according to)\s+((?:@[A-Za-z0-9_]+)|(?:[\p{L}][\p{L}'\-]*(?:\s+[\p{L}][\p{L}'\-]*){0,3}))",
    )
}

fn month_index(name: &str) -> Option<u32> {
    let lower = name.to_ascii_lowercase();
    MONTHS.iter().position(|m| *m == lower).map(|i| i as u32 + 1)
}

/// Extracts calendar dates and times of day.
///
/// Slash and dot dates are read day-first (`04/05/2022` is 4 May 2022).
/// Date spans are masked before time matching so `2022:05:04` never
/// yields a time.
pub fn extract_temporal_cues(text: &str) -> TemporalCues {
    let mut found: Vec<(usize, NaiveDate, String)> = Vec::new();
    let mut masked = text.as_bytes().to_vec();
    let mut mask = |start: usize, end: usize| {
        for b in &mut masked[start..end] {
            if !b.is_ascii_whitespace() {
                *b = b' ';
            }
        }
    };

    for caps in iso_date_re().captures_iter(text) {
        let m = caps.get(0).unwrap();
        let parsed = ymd(&caps[1], &caps[2], &caps[3]);
        if let Some(d) = parsed {
            found.push((m.start(), d, m.as_str().to_string()));
            mask(m.start(), m.end());
        }
    }
    for caps in dmy_date_re().captures_iter(text) {
        let m = caps.get(0).unwrap();
        if let Some(d) = ymd(&caps[3], &caps[2], &caps[1]) {
            found.push((m.start(), d, m.as_str().to_string()));
            mask(m.start(), m.end());
        }
    }
    for caps in day_month_name_re().captures_iter(text) {
        let m = caps.get(0).unwrap();
        let month = month_index(&caps[2]).unwrap_or(0);
        if let Some(d) = ymd(&caps[3], &month.to_string(), &caps[1]) {
            found.push((m.start(), d, m.as_str().to_string()));
            mask(m.start(), m.end());
        }
    }
    for caps in month_name_day_re().captures_iter(text) {
        let m = caps.get(0).unwrap();
        let month = month_index(&caps[1]).unwrap_or(0);
        if let Some(d) = ymd(&caps[3], &month.to_string(), &caps[2]) {
            found.push((m.start(), d, m.as_str().to_string()));
            mask(m.start(), m.end());
        }
    }
    found.sort_by_key(|(pos, _, _)| *pos);

    // Masking only replaces ASCII bytes inside ASCII matches, so this stays valid UTF-8.
    let masked = String::from_utf8(masked).unwrap_or_default();
    let mut times: Vec<(usize, NaiveTime, String)> = Vec::new();
    for caps in time_re().captures_iter(&masked) {
        let m = caps.get(0).unwrap();
        let h: u32 = caps[1].parse().unwrap_or(99);
        let mi: u32 = caps[2].parse().unwrap_or(99);
        let s: u32 = caps.get(3).map_or(Some(0), |s| s.as_str().parse().ok()).unwrap_or(99);
        if let Some(t) = NaiveTime::from_hms_opt(h, mi, s) {
            times.push((m.start(), t, text[m.start()..m.end()].to_string()));
        }
    }

    let mut cues = TemporalCues::default();
    for (_, d, raw) in found {
        if !cues.dates.contains(&d) {
            cues.dates.push(d);
        }
        cues.cues.push(raw);
    }
    for (_, t, raw) in times {
        if !cues.times.contains(&t) {
            cues.times.push(t);
        }
        cues.cues.push(raw);
    }
    for word in token_re().find_iter(text) {
        let lower = word.as_str().to_lowercase();
        if DAYLIGHT_WORDS.contains(&lower.as_str()) && !cues.cues.contains(&lower) {
            cues.cues.push(lower);
        }
    }
    cues
}

fn ymd(y: &str, m: &str, d: &str) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(y.parse().ok()?, m.parse().ok()?, d.parse().ok()?)
}

/// First coordinate pair in the text, hemisphere form preferred.
pub fn parse_coordinates(text: &str) -> Option<GeoPoint> {
    if let Some(c) = hemisphere_coord_re().captures(text) {
        let mut lat: f64 = c[1].parse().ok()?;
        let mut lon: f64 = c[3].parse().ok()?;
        if c[2].eq_ignore_ascii_case("s") {
            lat = -lat;
        }
        if c[4].eq_ignore_ascii_case("w") {
            lon = -lon;
        }
        if let Some(p) = GeoPoint::new(lat, lon) {
            return Some(p);
        }
    }
    let c = decimal_coord_re().captures(text)?;
    GeoPoint::new(c[1].parse().ok()?, c[2].parse().ok()?)
}

fn is_calendar_word(word: &str) -> bool {
    let lower = word.to_lowercase();
    MONTHS.contains(&lower.as_str()) || WEEKDAYS.contains(&lower.as_str())
}

/// Place names in order of first appearance: street-type phrases,
/// gazetteer entries and capitalized words after a locative preposition.
pub fn find_places(text: &str) -> Vec<String> {
    let mut hits: Vec<(usize, String)> = Vec::new();
    for m in capitalized_run_re().find_iter(text) {
        let words: Vec<&str> = m.as_str().split_whitespace().collect();
        if words.iter().any(|w| STREET_TOKENS.contains(&w.to_lowercase().as_str())) {
            hits.push((m.start(), m.as_str().to_string()));
        }
    }
    for place in GAZETTEER {
        let mut from = 0;
        while let Some(pos) = text[from..].find(place) {
            let start = from + pos;
            let end = start + place.len();
            let before_ok = text[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
            let after_ok = text[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
            if before_ok && after_ok {
                hits.push((start, place.to_string()));
                break;
            }
            from = end;
        }
    }
    for caps in locative_re().captures_iter(text) {
        let m = caps.get(1).unwrap();
        let phrase: Vec<&str> = m
            .as_str()
            .split_whitespace()
            .take_while(|w| !is_calendar_word(w))
            .collect();
        if !phrase.is_empty() {
            hits.push((m.start(), phrase.join(" ")));
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.len().cmp(&a.1.len())));
    let mut out: Vec<String> = Vec::new();
    for (_, place) in hits {
        let covered = out.iter().any(|p| p.contains(&place));
        if !covered {
            out.retain(|p| !place.contains(p.as_str()));
            out.push(place);
        }
    }
    out
}

/// A display place name: up to the first two places joined with ", ".
pub fn place_name(text: &str) -> Option<String> {
    let places = find_places(text);
    if places.is_empty() {
        None
    } else {
        Some(places.into_iter().take(2).collect::<Vec<_>>().join(", "))
    }
}

/// True when the text carries a location signal.
pub fn has_location(text: &str) -> bool {
    parse_coordinates(text).is_some() || !find_places(text).is_empty()
}

/// People, groups and accounts: `@handles`, role phrases such as
/// "local eyewitnesses", and multi-word capitalized names that are not places.
pub fn find_entities(text: &str) -> Vec<String> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for m in handle_re().find_iter(text) {
        out.push((m.start(), m.as_str().to_string()));
    }
    let tokens: Vec<regex::Match> = token_re().find_iter(text).collect();
    for (i, tok) in tokens.iter().enumerate() {
        let lower = tok.as_str().to_lowercase();
        if ROLE_WORDS.contains(&lower.as_str()) {
            let start = if i > 0 && !STOPWORDS.contains(&tokens[i - 1].as_str().to_lowercase().as_str()) {
                tokens[i - 1].start()
            } else {
                tok.start()
            };
            out.push((start, text[start..tok.end()].to_string()));
        }
    }
    let places = find_places(text);
    for m in capitalized_run_re().find_iter(text) {
        let words: Vec<&str> = m.as_str().split_whitespace().collect();
        if words.len() < 2 || words.iter().any(|w| is_calendar_word(w)) {
            continue;
        }
        if places
            .iter()
            .any(|p| p.contains(m.as_str()) || m.as_str().contains(p.as_str()))
        {
            continue;
        }
        out.push((m.start(), m.as_str().to_string()));
    }
    out.sort_by_key(|(pos, _)| *pos);
    let mut seen: Vec<String> = Vec::new();
    for (_, e) in out {
        if !seen.iter().any(|s| s.eq_ignore_ascii_case(&e)) {
            seen.push(e);
        }
    }
    seen
}

/// Attribution from byline-style phrases ("reported by ...", "filmed by ...").
pub fn find_byline(text: &str) -> Option<String> {
    let caps = byline_re().captures(text)?;
    let who = caps[1].trim_end_matches(|c: char| !c.is_alphanumeric()).trim();
    (!who.is_empty()).then(|| who.to_string())
}

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word.to_lowercase().as_str())
}

/// Content words in order of appearance, case preserved, deduplicated
/// case-insensitively.
pub fn keywords(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in token_re().find_iter(text) {
        let word = m.as_str().trim_end_matches(['.', ':', '/', '-', '\'']);
        if word.is_empty() || is_stopword(word) {
            continue;
        }
        let has_digit = word.chars().any(|c| c.is_ascii_digit());
        if word.chars().count() < 3 && !has_digit {
            continue;
        }
        if !out.iter().any(|w| w.eq_ignore_ascii_case(word)) {
            out.push(word.to_string());
        }
    }
    out
}

/// Lowercased, whitespace-collapsed form used for identity comparisons.
pub fn canonical(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Splits prose into sentences on `.`, `!`, `?` and newlines, keeping
/// decimal points, times and dates intact.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            push_sentence(&mut out, &mut current);
            continue;
        }
        current.push(c);
        if matches!(c, '.' | '!' | '?') {
            let next = chars.get(i + 1).copied();
            if next.is_none_or(char::is_whitespace) {
                push_sentence(&mut out, &mut current);
            }
        }
    }
    push_sentence(&mut out, &mut current);
    out
}

fn push_sentence(out: &mut Vec<String>, current: &mut String) {
    let s = current.trim();
    if s.chars().any(char::is_alphanumeric) {
        out.push(s.to_string());
    }
    current.clear();
}

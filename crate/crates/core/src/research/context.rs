//! 5W source context: provider extraction merged with local pattern rules.

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayError, ProviderSourceContext, SearchResult};
use crate::text::{self, GeoPoint};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlaceContext {
    pub place_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<NaiveTime>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceContext {
    pub source_detail: String,
    #[serde(default, rename = "where", skip_serializing_if = "Option::is_none")]
    pub where_: Option<PlaceContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<TimeContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub who: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub why: Option<String>,
}

impl SourceContext {
    fn has_5w(&self) -> bool {
        self.where_.is_some() || self.when.is_some() || self.who.is_some() || self.why.is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.source_detail.trim().is_empty() && !self.has_5w()
    }

    /// Place name, who and why joined for text matching.
    pub fn text(&self) -> String {
        let mut parts = vec![self.source_detail.as_str()];
        if let Some(w) = &self.where_ {
            parts.push(&w.place_name);
        }
        parts.extend(self.who.as_deref());
        parts.extend(self.why.as_deref());
        parts.join(" ")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ContextError {
    #[error("no source context could be extracted from {url}")]
    Unextractable { url: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

/// Context read from text alone.
pub fn local_context(text_body: &str) -> SourceContext {
    let cues = text::extract_temporal_cues(text_body);
    let geo = text::parse_coordinates(text_body);
    let place = text::place_name(text_body);
    let where_ = match (place, geo) {
        (None, None) => None,
        (place, geo) => Some(PlaceContext {
            place_name: place.unwrap_or_default(),
            geo,
        }),
    };
    let when = (!cues.is_empty()).then(|| TimeContext {
        date: cues.dates.first().copied(),
        time: cues.times.first().copied(),
        cues: cues.cues.clone(),
    });
    let who = text::find_byline(text_body).or_else(|| text::find_entities(text_body).into_iter().next());
    SourceContext {
        source_detail: String::new(),
        where_,
        when,
        who,
        why: None,
    }
}

/// Provider fields win; local rules fill whatever the provider left out.
pub fn merge_context(provider: ProviderSourceContext, local: SourceContext) -> SourceContext {
    let pw = provider.where_.unwrap_or_default();
    let lw = local.where_.unwrap_or_default();
    let place_name = non_empty(pw.place_name).unwrap_or(lw.place_name);
    let geo = pw.geo.or(lw.geo);
    let where_ = (!place_name.is_empty() || geo.is_some()).then_some(PlaceContext { place_name, geo });

    let pt = provider.when.unwrap_or_default();
    let lt = local.when.unwrap_or_default();
    let date = pt.date.or(lt.date);
    let time = pt.time.or(lt.time);
    let cues = if pt.cues.is_empty() { lt.cues } else { pt.cues };
    let when = (date.is_some() || time.is_some()).then_some(TimeContext { date, time, cues });

    SourceContext {
        source_detail: non_empty(provider.source_detail).unwrap_or(local.source_detail),
        where_,
        when,
        who: non_empty(provider.who).or(local.who),
        why: non_empty(provider.why).or(local.why),
    }
}

/// A one-line description of the item itself.
pub fn describe_item(item: &SearchResult) -> String {
    let who = if item.publisher.is_empty() {
        super::source::registered_domain(&item.url)
    } else {
        item.publisher.clone()
    };
    let what = if item.title.is_empty() {
        let first = text::sentences(&item.snippet).into_iter().next().unwrap_or_default();
        first.chars().take(120).collect()
    } else {
        item.title.clone()
    };
    if what.is_empty() {
        format!("{who} ({})", item.url)
    } else {
        format!("{who}: {what} ({})", item.url)
    }
}

/// Provider extraction over `body`, completed by local rules.
///
/// Fails with `Unextractable` when neither the provider nor the local
/// rules produce any of where, when, who or why and the provider gave no
/// source detail.
pub fn extract_source_context(item: &SearchResult, body: &str, gw: &Gateway) -> Result<SourceContext, ContextError> {
    if body.trim().is_empty() {
        return Err(ContextError::Unextractable { url: item.url.clone() });
    }
    let provider = gw.extract_source_context(&item.url, body)?;
    let provider_detail = provider.source_detail.clone().filter(|s| !s.trim().is_empty());
    let mut ctx = merge_context(provider, local_context(body));
    if provider_detail.is_none() && !ctx.has_5w() {
        return Err(ContextError::Unextractable { url: item.url.clone() });
    }
    if ctx.source_detail.trim().is_empty() {
        ctx.source_detail = describe_item(item);
    }
    Ok(ctx)
}

/// Local-only variant for search snippets; `None` when nothing is found.
pub fn snippet_context(item: &SearchResult) -> Option<SourceContext> {
    let body = format!("{}. {}", item.title, item.snippet);
    let mut ctx = local_context(&body);
    if !ctx.has_5w() {
        return None;
    }
    ctx.source_detail = describe_item(item);
    Some(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ops::EXTRACT_SOURCE_CONTEXT;
    use crate::gateway::{Fixture, FixtureAdapter, Mode, ProviderKind};
    use chrono::{TimeZone, Utc};
    use std::sync::Arc;

    fn item(url: &str) -> SearchResult {
        SearchResult {
            url: url.into(),
            title: "Blast in Dnipro".into(),
            snippet: String::new(),
            publisher: "Dnipro News".into(),
            published_at: None,
            retrieved_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    fn gateway(response: serde_json::Value) -> Gateway {
        let fx = Fixture {
            provider: ProviderKind::MultimodalModel,
            operation: EXTRACT_SOURCE_CONTEXT.into(),
            match_fields: Default::default(),
            response,
        };
        Gateway::new(Mode::Mock).with_adapter(Arc::new(FixtureAdapter::new(vec![fx])))
    }

    #[test]
    fn local_rules_fill_missing_fields() {
        let gw = gateway(serde_json::json!({ "who": "Cesar News" }));
        let body = "A missile hit Naberezhna Zavodska in Dnipro on 4 May 2022 at 48.4647° N, 35.0462° E.";
        let ctx = extract_source_context(&item("https://dnipro-news.test/a"), body, &gw).unwrap();
        assert_eq!(ctx.who.as_deref(), Some("Cesar News"));
        let w = ctx.where_.unwrap();
        assert!(w.place_name.contains("Naberezhna Zavodska"));
        assert!((w.geo.unwrap().lat - 48.4647).abs() < 1e-9);
        let when = ctx.when.unwrap();
        assert_eq!(when.date, NaiveDate::from_ymd_opt(2022, 5, 4));
        assert_eq!(when.time, None);
        assert!(ctx.source_detail.contains("https://dnipro-news.test/a"));
    }

    #[test]
    fn provider_fields_take_precedence() {
        let gw = gateway(serde_json::json!({ "when": { "date": "2022-05-04", "time": "19:58:37" } }));
        let ctx = extract_source_context(&item("https://x.test/"), "Seen on 05/06/2022 at 10:00", &gw).unwrap();
        let when = ctx.when.unwrap();
        assert_eq!(when.date, NaiveDate::from_ymd_opt(2022, 5, 4));
        assert_eq!(when.time, NaiveTime::from_hms_opt(19, 58, 37));
    }

    #[test]
    fn nothing_found_is_unextractable() {
        let gw = gateway(serde_json::json!({}));
        let err = extract_source_context(&item("https://x.test/"), "lorem ipsum dolor", &gw).unwrap_err();
        assert!(matches!(err, ContextError::Unextractable { .. }));
        let err = extract_source_context(&item("https://x.test/"), "   ", &gw).unwrap_err();
        assert!(matches!(err, ContextError::Unextractable { .. }));
    }

    #[test]
    fn provider_detail_alone_is_enough() {
        let gw = gateway(serde_json::json!({ "source_detail": "Press release" }));
        let ctx = extract_source_context(&item("https://x.test/"), "lorem ipsum", &gw).unwrap();
        assert_eq!(ctx.source_detail, "Press release");
        assert!(!ctx.is_empty());
    }

    #[test]
    fn snippet_context_needs_a_signal() {
        let mut it = item("https://x.test/");
        it.title = "nothing here".into();
        assert!(snippet_context(&it).is_none());
        it.snippet = "Explosion in Dnipro".into();
        assert!(snippet_context(&it).unwrap().where_.is_some());
    }
}

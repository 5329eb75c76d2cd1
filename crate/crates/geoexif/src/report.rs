//! Live report over the current filter: matched markers, their devices,
//! findings and linked untagged images, plus a day-by-day timeline.

use std::fs;
use std::path::Path;

use base64::Engine;
use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use geoexif_core::{FilterSpec, SlotHours, VerificationFinding};
use serde::{Deserialize, Serialize};

use crate::feed::escape_xml;
use crate::query::to_query;
use crate::store::{MarkerRow, Store, StoreError};

pub const DEFAULT_SLOT_HOURS: u32 = 1;

pub const CAVEAT_DEVICE: &str = "Devices are identified from EXIF identity tags only. Two devices of the same \
    make and model without serial or owner information share one identifier.";
pub const CAVEAT_LINKS: &str = "Linked images come from the same identified device within the time slot. \
    That they show the same place is a probability that decreases as the slot widens.";
pub const CAVEAT_CLOCKS: &str = "Camera time has no zone. It is compared with GPS time (UTC) as raw wall-clock values.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSummary {
    pub fake_id: String,
    pub nb_fake_id: u32,
    pub ordre: u32,
    pub color: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedEntry {
    pub id: i64,
    pub name: String,
    pub path: String,
    pub datetime: Option<NaiveDateTime>,
    pub thumb_link: Option<String>,
    /// Always true: the link is a same-device, same-time-window inference.
    pub probable_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub marker: MarkerRow,
    pub thumb_link: Option<String>,
    /// Thumbnail as a `data:` URI.
    pub thumb_data: Option<String>,
    pub address: Option<String>,
    pub findings: Vec<VerificationFinding>,
    pub linked: Vec<LinkedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineDay {
    /// `None` groups markers without a capture time.
    pub day: Option<NaiveDate>,
    pub entry_ids: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub generated_at: DateTime<Utc>,
    pub run_id: String,
    pub filter_echo: String,
    pub slot: u32,
    pub device_summary: Vec<DeviceSummary>,
    pub entries: Vec<ReportEntry>,
    pub timeline: Vec<TimelineDay>,
    pub caveats: Vec<String>,
}

/// Active slot for linked images: the filter's slot, else one hour.
pub fn report_slot(filter: &FilterSpec) -> SlotHours {
    filter.slot().unwrap_or_else(|| SlotHours::new(DEFAULT_SLOT_HOURS).expect("valid slot"))
}

fn data_uri(workspace: &Path, rel: &str) -> Option<String> {
    let bytes = fs::read(workspace.join(rel)).ok()?;
    Some(format!("data:image/jpeg;base64,{}", base64::engine::general_purpose::STANDARD.encode(bytes)))
}

pub fn build_report(
    store: &Store,
    run_id: &str,
    workspace: &Path,
    filter: &FilterSpec,
    slot: SlotHours,
    generated_at: DateTime<Utc>,
) -> Result<ReportDocument, StoreError> {
    let markers = store.query_markers(run_id, filter)?;
    let mut entries = Vec::with_capacity(markers.len());
    for m in markers {
        let linked = store
            .linked_non_geotagged(run_id, m.asset.id, slot)?
            .into_iter()
            .map(|a| LinkedEntry {
                id: a.id,
                thumb_link: a.thumb_name.as_ref().map(|_| format!("/thumb/{}", a.id)),
                name: a.name,
                path: a.path,
                datetime: a.datetime,
                probable_only: true,
            })
            .collect();
        entries.push(ReportEntry {
            thumb_link: m.asset.thumb_name.as_ref().map(|_| format!("/thumb/{}", m.asset.id)),
            thumb_data: m.asset.thumb_name.as_deref().and_then(|t| data_uri(workspace, t)),
            address: m.asset.address.clone(),
            findings: m.asset.findings.clone(),
            linked,
            marker: m,
        });
    }

    let mut device_summary: Vec<DeviceSummary> = Vec::new();
    for e in &entries {
        if !device_summary.iter().any(|d| d.fake_id == e.marker.asset.fake_id) {
            device_summary.push(DeviceSummary {
                fake_id: e.marker.asset.fake_id.clone(),
                nb_fake_id: e.marker.nb_fake_id,
                ordre: e.marker.ordre,
                color: e.marker.color,
            });
        }
    }
    device_summary.sort_by_key(|d| d.ordre);

    let mut order: Vec<&ReportEntry> = entries.iter().collect();
    order.sort_by(|a, b| {
        let key = |e: &ReportEntry| (e.marker.asset.datetime.is_none(), e.marker.asset.datetime, e.marker.asset.id);
        key(a).cmp(&key(b))
    });
    let mut timeline: Vec<TimelineDay> = Vec::new();
    for e in order {
        let day = e.marker.asset.datetime.map(|t| t.date());
        match timeline.last_mut() {
            Some(last) if last.day == day => last.entry_ids.push(e.marker.asset.id),
            _ => timeline.push(TimelineDay { day, entry_ids: vec![e.marker.asset.id] }),
        }
    }

    Ok(ReportDocument {
        generated_at,
        run_id: run_id.to_owned(),
        filter_echo: to_query(filter),
        slot: slot.hours(),
        device_summary,
        entries,
        timeline,
        caveats: vec![CAVEAT_DEVICE.into(), CAVEAT_LINKS.into(), CAVEAT_CLOCKS.into()],
    })
}

pub fn render_json(doc: &ReportDocument) -> String {
    serde_json::to_string_pretty(doc).expect("report serializes")
}

fn fmt_dt(t: Option<NaiveDateTime>) -> String {
    t.map(|t| t.format("%Y-%m-%d %H:%M:%S").to_string()).unwrap_or_else(|| "undated".into())
}

/// Self-contained HTML: inline style, thumbnails as data URIs, no external references.
pub fn render_html(doc: &ReportDocument) -> String {
    let e = escape_xml;
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>Geolocation report</title>\n");
    h.push_str(
        "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}td,th{border:1px solid #999;\
         padding:2px 6px}.entry{border-top:1px solid #ccc;margin-top:1em;padding-top:.5em}.banner{background:#fee;\
         padding:1em;font-weight:bold}.WARNING{color:#a00}.INFO{color:#555}img{max-width:256px}</style></head><body>\n",
    );
    h.push_str("<h1>Geolocation report</h1>\n");
    h.push_str(&format!(
        "<p>Generated {} from run <code>{}</code>. Filter: <code>{}</code>. Linked-image slot: &plusmn;{} h.</p>\n",
        doc.generated_at.format("%Y-%m-%d %H:%M:%S UTC"),
        e(&doc.run_id),
        if doc.filter_echo.is_empty() { "none".into() } else { e(&doc.filter_echo) },
        doc.slot
    ));
    h.push_str("<ul class=\"caveats\">");
    for c in &doc.caveats {
        h.push_str(&format!("<li>{}</li>", e(c)));
    }
    h.push_str("</ul>\n");
    if doc.entries.is_empty() {
        h.push_str("<p class=\"banner\">No matches for this filter.</p>\n");
    }
    h.push_str("<h2>Devices</h2>\n<table><tr><th>Rank</th><th>Device</th><th>Images</th></tr>\n");
    for d in &doc.device_summary {
        h.push_str(&format!("<tr><td>{}</td><td>{}</td><td>{}</td></tr>\n", d.ordre, e(&d.fake_id), d.nb_fake_id));
    }
    h.push_str("</table>\n<h2>Markers</h2>\n");
    for en in &doc.entries {
        let m = &en.marker;
        h.push_str(&format!("<div class=\"entry\" id=\"m{}\">\n<h3>#{} {}</h3>\n", m.asset.id, m.asset.id, e(&m.asset.name)));
        if let Some(src) = &en.thumb_data {
            h.push_str(&format!("<img alt=\"thumbnail\" src=\"{src}\">\n"));
        }
        h.push_str(&format!(
            "<p>{}<br>Device {} (rank {})<br>Taken {}<br>Position {:.6}, {:.6}{}",
            e(&m.asset.path),
            e(&m.asset.fake_id),
            m.ordre,
            fmt_dt(m.asset.datetime),
            m.lat,
            m.lng,
            if m.multiples > 0 { format!("<br>Same location as {} other image(s)", m.multiples) } else { String::new() }
        ));
        if let Some(a) = &en.address {
            h.push_str(&format!("<br>Address {}", e(a)));
        }
        h.push_str("</p>\n");
        if !en.findings.is_empty() {
            h.push_str("<ul class=\"findings\">");
            for f in &en.findings {
                h.push_str(&format!(
                    "<li class=\"{}\">{} {}: {}</li>",
                    if f.severity == geoexif_core::Severity::Warning { "WARNING" } else { "INFO" },
                    if f.severity == geoexif_core::Severity::Warning { "WARNING" } else { "INFO" },
                    f.code,
                    e(&f.detail)
                ));
            }
            h.push_str("</ul>\n");
        }
        if !en.linked.is_empty() {
            h.push_str(&format!("<p>Probably linked untagged images (&plusmn;{} h):</p><ul class=\"linked\">", doc.slot));
            for l in &en.linked {
                h.push_str(&format!("<li>#{} {} ({})</li>", l.id, e(&l.name), fmt_dt(l.datetime)));
            }
            h.push_str("</ul>\n");
        }
        h.push_str("</div>\n");
    }
    h.push_str("<h2>Timeline</h2>\n<ul class=\"timeline\">");
    for d in &doc.timeline {
        let ids: Vec<String> = d.entry_ids.iter().map(|i| format!("<a href=\"#m{i}\">#{i}</a>")).collect();
        let day = d.day.map_or_else(|| "undated".into(), |d| d.to_string());
        h.push_str(&format!("<li>{day}: {}</li>", ids.join(", ")));
    }
    h.push_str("</ul>\n</body></html>\n");
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureSpec, CORPUS_DIR};
    use crate::scan::{scan_tree, ScanConfig, ScanProgress};
    use crate::store::STORE_FILE;

    fn scanned(preset: &str) -> (tempfile::TempDir, tempfile::TempDir, String) {
        let out = tempfile::tempdir().unwrap();
        let ws = tempfile::tempdir().unwrap();
        generate(&FixtureSpec::preset(preset).unwrap(), out.path()).unwrap();
        let run = scan_tree(&ScanConfig::new(out.path().join(CORPUS_DIR), ws.path()), &ScanProgress::default()).unwrap();
        (out, ws, run.run.id)
    }

    #[test]
    fn device_filter_report() {
        let (_o, ws, run) = scanned("same-location");
        let store = Store::open_read_only(&ws.path().join(STORE_FILE)).unwrap();
        let f = FilterSpec::all().with_device("NIKONNIKON D300");
        let doc = build_report(&store, &run, ws.path(), &f, report_slot(&f), Utc::now()).unwrap();
        assert_eq!(doc.entries.len(), 1);
        assert_eq!(doc.device_summary.len(), 1);
        assert!(doc.entries[0].thumb_data.as_deref().unwrap().starts_with("data:image/jpeg;base64,"));
        let html = render_html(&doc);
        assert!(!html.contains("http://") && !html.contains("https://"));
        assert!(!html.contains("No matches"));
    }

    #[test]
    fn empty_result_has_banner_and_stable_body() {
        let (_o, ws, run) = scanned("same-location");
        let store = Store::open_read_only(&ws.path().join(STORE_FILE)).unwrap();
        let f = FilterSpec::all().with_device("nobody");
        let at = Utc::now();
        let a = build_report(&store, &run, ws.path(), &f, report_slot(&f), at).unwrap();
        let b = build_report(&store, &run, ws.path(), &f, report_slot(&f), at).unwrap();
        assert!(a.entries.is_empty() && a.timeline.is_empty());
        assert!(render_html(&a).contains("No matches"));
        assert_eq!(render_json(&a), render_json(&b));
    }

    #[test]
    fn timeline_partitions_entries() {
        let (_o, ws, run) = scanned("fig6");
        let store = Store::open_read_only(&ws.path().join(STORE_FILE)).unwrap();
        let f = FilterSpec::all();
        let doc = build_report(&store, &run, ws.path(), &f, SlotHours::new(2).unwrap(), Utc::now()).unwrap();
        let mut ids: Vec<i64> = doc.timeline.iter().flat_map(|d| d.entry_ids.clone()).collect();
        ids.sort();
        let mut expected: Vec<i64> = doc.entries.iter().map(|e| e.marker.asset.id).collect();
        expected.sort();
        assert_eq!(ids, expected);
        assert_eq!(doc.timeline.len(), 2);
        let first = doc.entries.iter().find(|e| e.marker.asset.name == "DSC04487.JPG").unwrap();
        assert_eq!(first.linked.len(), 15);
    }
}

//! Marker feed in the XML attribute layout consumed by map clients, and its JSON twin.

use serde::{Deserialize, Serialize};

use crate::store::MarkerRow;

pub const FEED_DATE_FMT: &str = "%d.%m.%Y %H:%M:%S";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub name: String,
    pub brand: String,
    pub model: String,
    pub fake_id: String,
    /// `DD.MM.YYYY HH:MM:SS`, empty when the image has no capture time.
    pub date: String,
    pub lat: f64,
    pub lng: f64,
    pub id: i64,
    pub ordre: u32,
    pub multiples: u32,
    pub non_geotaggees: String,
    pub nb_fake_id: u32,
    pub non_geotag_h1: u32,
    pub non_geotag_h2: u32,
    pub non_geotag_h3: u32,
    pub non_geotag_h4: u32,
    pub non_geotag_h5: u32,
    pub non_geotag_h12: u32,
    pub non_geotag_h24: u32,
}

impl From<&MarkerRow> for FeedEntry {
    fn from(m: &MarkerRow) -> Self {
        let l = m.links.0;
        FeedEntry {
            name: m.asset.name.clone(),
            brand: m.asset.make.clone(),
            model: m.asset.model.clone(),
            fake_id: m.asset.fake_id.clone(),
            date: m.asset.datetime.map(|t| t.format(FEED_DATE_FMT).to_string()).unwrap_or_default(),
            lat: m.lat,
            lng: m.lng,
            id: m.asset.id,
            ordre: m.ordre,
            multiples: m.multiples,
            non_geotaggees: String::new(),
            nb_fake_id: m.nb_fake_id,
            non_geotag_h1: l[0],
            non_geotag_h2: l[1],
            non_geotag_h3: l[2],
            non_geotag_h4: l[3],
            non_geotag_h5: l[4],
            non_geotag_h12: l[5],
            non_geotag_h24: l[6],
        }
    }
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push_str(&format!("&#x{:X};", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl FeedEntry {
    pub fn attributes(&self) -> [(&'static str, String); 19] {
        [
            ("name", self.name.clone()),
            ("brand", self.brand.clone()),
            ("model", self.model.clone()),
            ("fake_id", self.fake_id.clone()),
            ("date", self.date.clone()),
            ("lat", format!("{:.6}", self.lat)),
            ("lng", format!("{:.6}", self.lng)),
            ("id", self.id.to_string()),
            ("ordre", self.ordre.to_string()),
            ("multiples", self.multiples.to_string()),
            ("non_geotaggees", self.non_geotaggees.clone()),
            ("nb_fake_id", self.nb_fake_id.to_string()),
            ("non_geotag_h1", self.non_geotag_h1.to_string()),
            ("non_geotag_h2", self.non_geotag_h2.to_string()),
            ("non_geotag_h3", self.non_geotag_h3.to_string()),
            ("non_geotag_h4", self.non_geotag_h4.to_string()),
            ("non_geotag_h5", self.non_geotag_h5.to_string()),
            ("non_geotag_h12", self.non_geotag_h12.to_string()),
            ("non_geotag_h24", self.non_geotag_h24.to_string()),
        ]
    }

    /// One `<marker .../>` element.
    pub fn to_xml_element(&self) -> String {
        let attrs: Vec<String> = self.attributes().iter().map(|(k, v)| format!("{k}=\"{}\"", escape_xml(v))).collect();
        format!("<marker {}/>", attrs.join(" "))
    }
}

pub fn entries(markers: &[MarkerRow]) -> Vec<FeedEntry> {
    markers.iter().map(FeedEntry::from).collect()
}

pub fn to_xml(entries: &[FeedEntry]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if entries.is_empty() {
        out.push_str("<markers/>\n");
        return out;
    }
    out.push_str("<markers>\n");
    for e in entries {
        out.push_str("  ");
        out.push_str(&e.to_xml_element());
        out.push('\n');
    }
    out.push_str("</markers>\n");
    out
}

pub fn to_json(entries: &[FeedEntry]) -> String {
    serde_json::to_string(entries).expect("feed entries serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::AssetRow;
    use chrono::NaiveDate;
    use geoexif_core::SlotCounts;

    pub(crate) fn row26() -> MarkerRow {
        MarkerRow {
            asset: AssetRow {
                id: 26,
                name: "DSC04487.JPG".into(),
                path: "/ev/DSC04487.JPG".into(),
                hash: String::new(),
                kind: "JPEG".into(),
                thumb_name: None,
                make: "SONY".into(),
                model: "DSC-HX100V".into(),
                fake_id: "SONYDSC-HX100V".into(),
                datetime: NaiveDate::from_ymd_opt(2013, 8, 11).unwrap().and_hms_opt(16, 3, 41),
                gps_datetime: None,
                address: None,
                metadata: Default::default(),
                findings: vec![],
            },
            lat: 43.20364,
            lng: 5.822985,
            altitude_m: None,
            bucket: String::new(),
            multiples: 0,
            reference: true,
            color: 0,
            ordre: 1,
            nb_fake_id: 29,
            links: SlotCounts([11, 15, 25, 25, 25, 25, 25]),
        }
    }

    #[test]
    fn element_matches_published_layout() {
        let e = FeedEntry::from(&row26());
        assert_eq!(
            e.to_xml_element(),
            "<marker name=\"DSC04487.JPG\" brand=\"SONY\" model=\"DSC-HX100V\" fake_id=\"SONYDSC-HX100V\" \
             date=\"11.08.2013 16:03:41\" lat=\"43.203640\" lng=\"5.822985\" id=\"26\" ordre=\"1\" multiples=\"0\" \
             non_geotaggees=\"\" nb_fake_id=\"29\" non_geotag_h1=\"11\" non_geotag_h2=\"15\" non_geotag_h3=\"25\" \
             non_geotag_h4=\"25\" non_geotag_h5=\"25\" non_geotag_h12=\"25\" non_geotag_h24=\"25\"/>"
        );
    }

    #[test]
    fn empty_feeds() {
        assert!(to_xml(&[]).ends_with("<markers/>\n"));
        assert_eq!(to_json(&[]), "[]");
    }

    #[test]
    fn json_keeps_integer_id_and_order() {
        let json = to_json(&entries(&[row26()]));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v[0]["id"], serde_json::json!(26));
        assert!(json.find("\"name\"").unwrap() < json.find("\"non_geotag_h24\"").unwrap());
    }

    #[test]
    fn attribute_values_are_escaped() {
        let mut m = row26();
        m.asset.name = "a\"<&>.jpg".into();
        assert!(FeedEntry::from(&m).to_xml_element().contains("name=\"a&quot;&lt;&amp;&gt;.jpg\""));
    }
}

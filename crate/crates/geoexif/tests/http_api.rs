mod common;

use std::fs;
use std::net::SocketAddr;

use common::{json, scanned};
use geoexif::api::Api;

/// Start the axum server on an ephemeral port in a background runtime.
fn serve(api: Api) -> (SocketAddr, tokio::runtime::Runtime) {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(async move { axum::serve(listener, geoexif::server::router(api)).await.unwrap() });
    (addr, rt)
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

fn get(addr: SocketAddr, path: &str) -> (u16, String, Vec<u8>) {
    let mut r = agent().get(&format!("http://{addr}{path}")).call().unwrap();
    let ct = r.headers().get("content-type").map(|v| v.to_str().unwrap().to_owned()).unwrap_or_default();
    let status = r.status().as_u16();
    (status, ct, r.body_mut().read_to_vec().unwrap())
}

#[test]
fn endpoints_over_http() {
    let case = scanned("fig6");
    let (addr, _rt) = serve(case.api());
    let (s, ct, body) = get(addr, "/markers.xml");
    assert_eq!(s, 200);
    assert!(ct.starts_with("application/xml"));
    assert_eq!(body, case.api().get("/markers.xml").body);
    let (s, ct, _) = get(addr, "/markers.json?device=SONYDSC-HX100V&slot=h2");
    assert_eq!((s, ct.as_str()), (200, "application/json"));
    assert_eq!(get(addr, "/thumb/26").1, "image/jpeg");
    assert_eq!(get(addr, "/image/26").0, 200);
    assert_eq!(get(addr, "/meta/26").0, 200);
    assert_eq!(get(addr, "/linked/26?slot=1").0, 200);
    assert_eq!(get(addr, "/devices").0, 200);
    assert!(get(addr, "/report").1.starts_with("text/html"));
    assert_eq!(get(addr, "/markers.json?radius=5").0, 400);
    assert_eq!(get(addr, "/meta/99999").0, 404);
    assert_eq!(get(addr, "/nowhere").0, 404);
    let r = agent().post(&format!("http://{addr}/markers.xml")).send("x").unwrap();
    assert_eq!(r.status().as_u16(), 405);
    let r = agent().get(&format!("http://{addr}/devices")).call().unwrap();
    assert_eq!(r.headers().get("access-control-allow-origin").unwrap(), "*");
}

#[test]
fn empty_workspace_answers_conflict() {
    let ws = tempfile::tempdir().unwrap();
    let (addr, _rt) = serve(Api::new(ws.path()));
    for p in ["/markers.xml", "/markers.json", "/devices", "/report", "/meta/1", "/linked/1?slot=1"] {
        assert_eq!(get(addr, p).0, 409, "{p}");
    }
    assert!(!ws.path().join(geoexif::store::STORE_FILE).exists());
}

#[test]
fn vanished_original_is_gone_not_missing() {
    let case = scanned("fig6");
    let api = case.api();
    let meta = json(&api.get("/meta/26"));
    let path = meta["path"].as_str().unwrap().to_owned();
    let hash = meta["hash"].as_str().unwrap().to_owned();
    fs::remove_file(&path).unwrap();
    let r = api.get("/image/26");
    assert_eq!(r.status, 410);
    let v: serde_json::Value = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(v["last_known_sha256"], hash);
    // the thumbnail lives in the workspace and survives
    assert_eq!(api.get("/thumb/26").status, 200);
}

#[test]
fn modified_original_is_flagged() {
    let case = scanned("fig6");
    let api = case.api();
    let path = json(&api.get("/meta/26"))["path"].as_str().unwrap().to_owned();
    let mut bytes = fs::read(&path).unwrap();
    bytes.push(0);
    fs::write(&path, bytes).unwrap();
    assert_eq!(api.get("/image/26").header("X-Content-Matches-Scan"), Some("false"));
}

#[test]
fn static_ui_is_served_without_traversal() {
    let case = scanned("fig6");
    let ui = tempfile::tempdir().unwrap();
    fs::write(ui.path().join("index.html"), "<html>map</html>").unwrap();
    fs::write(ui.path().join("app.js"), "run()").unwrap();
    let api = case.api().with_ui(ui.path());
    assert_eq!(api.get("/").text(), "<html>map</html>");
    assert_eq!(api.get("/app.js").content_type, "text/javascript");
    assert_eq!(api.get("/../Cargo.toml").status, 404);
    assert_eq!(api.get("/%2e%2e/Cargo.toml").status, 404);
    let (addr, _rt) = serve(api);
    assert_eq!(get(addr, "/app.js").0, 200);
    assert_eq!(get(addr, "/..%2f..%2fetc/passwd").0, 404);
}

#[test]
fn linked_entries_carry_the_caveat() {
    let case = scanned("fig6");
    let api = case.api();
    let linked = json(&api.get("/linked/26?slot=1"));
    let arr = linked.as_array().unwrap();
    assert_eq!(arr.len(), 11);
    assert!(arr.iter().all(|e| e["probable_only"] == true && e["caveat"].as_str().is_some_and(|c| !c.is_empty())));
    let times: Vec<&str> = arr.iter().map(|e| e["datetime"].as_str().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

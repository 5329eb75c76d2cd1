use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::{Parser, Subcommand, ValueEnum};
use url::Url;

use geoexif::api::Api;
use geoexif::fixtures::{generate, FixtureSpec};
use geoexif::geoservice::ProviderKind;
use geoexif::query::parse_filter;
use geoexif::report::{build_report, render_html, render_json, report_slot};
use geoexif::scan::{scan_tree, ScanConfig, ScanProgress};
use geoexif::store::{Store, STORE_FILE};

#[derive(Parser)]
#[command(name = "geoexif", version, about = "Read-only photo geolocation workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Cmd {
    /// Scan an evidence tree into a workspace. The tree is never written to.
    Scan {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, env = "GEOEXIF_WORKSPACE")]
        workspace: PathBuf,
        /// Refuse any network provider.
        #[arg(long)]
        offline: bool,
        #[arg(long, default_value_t = geoexif::thumb::DEFAULT_MAX_PX)]
        thumb_px: u32,
        #[arg(long)]
        reverse_geocode: bool,
        #[arg(long)]
        altitude_check: bool,
        /// Offline table, one `lat lng<TAB>address` per line.
        #[arg(long)]
        geocode_table: Option<PathBuf>,
        /// Offline table, one `lat lng<TAB>metres` per line.
        #[arg(long)]
        elevation_table: Option<PathBuf>,
        /// Reverse-geocoding service base URL; enables network lookups.
        #[arg(long)]
        provider_url: Option<Url>,
        #[arg(long)]
        elevation_url: Option<Url>,
        #[arg(long, default_value_t = 1.0)]
        rate_limit: f64,
    },
    /// Serve the feeds, thumbnails and reports of the latest finished scan.
    Serve {
        #[arg(long, env = "GEOEXIF_WORKSPACE")]
        workspace: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Directory with the static map client.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Write a synthetic evidence tree and its manifest.
    GenFixtures {
        #[arg(long)]
        out: PathBuf,
        /// Preset name, inline JSON or a JSON file.
        #[arg(long, default_value = "small")]
        spec: String,
    },
    /// Render a report for a filter, e.g. `--filter 'device=SONYDSC-HX100V&slot=2'`.
    Report {
        #[arg(long, env = "GEOEXIF_WORKSPACE")]
        workspace: PathBuf,
        #[arg(long, default_value = "")]
        filter: String,
        #[arg(long, value_enum, default_value_t = Format::Html)]
        format: Format,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Html,
    Json,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Scan {
            root,
            workspace,
            offline,
            thumb_px,
            reverse_geocode,
            altitude_check,
            geocode_table,
            elevation_table,
            provider_url,
            elevation_url,
            rate_limit,
        } => {
            let mut cfg = ScanConfig::new(root, workspace);
            cfg.thumbnail_max_px = thumb_px;
            cfg.reverse_geocode = reverse_geocode;
            cfg.altitude_check = altitude_check;
            cfg.geo.geocode_table = geocode_table;
            cfg.geo.elevation_table = elevation_table;
            cfg.geo.rate_limit_per_s = rate_limit;
            if provider_url.is_some() || elevation_url.is_some() {
                if offline {
                    bail!("--offline conflicts with --provider-url/--elevation-url");
                }
                cfg.geo.provider = ProviderKind::HttpProvider;
                cfg.geo.endpoint = provider_url.or_else(|| elevation_url.clone());
                cfg.geo.elevation_endpoint = elevation_url;
            }
            scan(&cfg)
        }
        Cmd::Serve { workspace, port, bind, ui } => {
            if !workspace.join(STORE_FILE).exists() {
                eprintln!("warning: no store in {}; endpoints answer 409 until a scan finishes", workspace.display());
            }
            let mut api = Api::new(workspace);
            if let Some(ui) = ui {
                api = api.with_ui(ui);
            }
            let addr: SocketAddr = format!("{bind}:{port}").parse().context("bind address")?;
            let rt = tokio::runtime::Runtime::new()?;
            println!("serving on http://{addr}");
            rt.block_on(geoexif::server::serve(api, addr))?;
            Ok(())
        }
        Cmd::GenFixtures { out, spec } => {
            let spec = FixtureSpec::resolve(&spec).with_context(|| format!("fixture spec {spec:?}"))?;
            let m = generate(&spec, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "files={} images={} geotagged={} devices={} -> {}",
                m.files_scanned,
                m.images_found,
                m.geotagged_count,
                m.devices.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Report { workspace, filter, format, out } => {
            let f = parse_filter(&filter)?;
            let store = Store::open_read_only(&workspace.join(STORE_FILE)).context("opening store")?;
            let run = store.latest_finished_run()?.context("no finished scan in this workspace")?;
            let doc = build_report(&store, &run.id, &workspace, &f, report_slot(&f), Utc::now())?;
            let text = match format {
                Format::Html => render_html(&doc),
                Format::Json => render_json(&doc),
            };
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn scan(cfg: &ScanConfig) -> Result<()> {
    let progress = Arc::new(ScanProgress::default());
    let done = Arc::new(AtomicBool::new(false));
    let ticker = {
        let (progress, done) = (progress.clone(), done.clone());
        std::thread::spawn(move || {
            while !done.load(Ordering::Relaxed) {
                std::thread::sleep(Duration::from_millis(500));
                let s = progress.snapshot();
                eprint!("\rscanned {} files, {} images, {} geotagged", s.files_scanned, s.images_found, s.geotagged);
            }
            eprintln!();
        })
    };
    let result = scan_tree(cfg, &progress);
    done.store(true, Ordering::Relaxed);
    let _ = ticker.join();
    let outcome = result?;
    let r = &outcome.run;
    println!("run {}", r.id);
    println!(
        "files_scanned={} images_found={} geotagged={} unreadable={} network_calls={}",
        r.files_scanned, r.images_found, r.geotagged_count, r.unreadable, outcome.network_calls
    );
    Ok(())
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ucds_core::analysis::{Dataset, DatasetReport};
use ucds_core::UrlPipeline;
use ucds_service::{Dispatcher, Importer, ReviewSession, Target};
use ucds_testkit::mock_http::{MockResponse, MockServer, RecordedRequest};

pub const TRIP: &str = "trip_android.txt";
pub const BOOK_CLUB: &str = "book_club_ios.txt";

/// Every name appearing in the fixtures.
pub const FIXTURE_NAMES: &[&str] = &[
    "Marisol Quintero",
    "Tobias Ekwueme",
    "Ines Fairweather",
    "Kwame Adjei",
    "Lucía Berrocal",
    "Hanne Vestergaard",
];

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn offline_importer() -> Importer {
    Importer::new(Arc::new(UrlPipeline::offline()))
}

pub fn import(session: &mut ReviewSession, name: &str) -> String {
    let imported = offline_importer().import_file(&fixture(name)).unwrap();
    session.add(imported).unwrap().chat_id
}

/// A mock collection endpoint that accepts every POST.
pub fn collector() -> MockServer {
    MockServer::start(|req: &RecordedRequest| {
        if req.method == "POST" {
            MockResponse::status(200)
        } else {
            MockResponse::status(405)
        }
    })
}

pub struct EndToEnd {
    pub report_text: String,
    pub report_json: String,
    pub previews: Vec<Vec<u8>>,
    pub posted: Vec<Vec<u8>>,
}

/// Two participants: P1 imports both fixtures and deletes one URL from the
/// first chat, P2 imports the book club chat untouched. Everything is
/// submitted to a mock endpoint, whose received bodies are laid out as an
/// analysis directory.
pub fn end_to_end(work: &Path) -> EndToEnd {
    let server = collector();
    let target = Target::Http(server.url("/submit"));
    let dispatcher = Dispatcher::default();
    let mut previews = Vec::new();

    let mut p1 = ReviewSession::open(ucds_service::store::Store::new(work.join("p1-session"))).unwrap();
    let trip = import(&mut p1, TRIP);
    let book = import(&mut p1, BOOK_CLUB);
    // Index 2 is booking.com; the message keeps its airbnb.mx link.
    p1.delete_url(&trip, 2).unwrap();
    for id in [&trip, &book] {
        previews.push(p1.preview(id).unwrap());
        p1.submit(id, vec![target.clone()], &dispatcher).unwrap();
    }

    let mut p2 = ReviewSession::open(ucds_service::store::Store::new(work.join("p2-session"))).unwrap();
    let book2 = import(&mut p2, BOOK_CLUB);
    previews.push(p2.preview(&book2).unwrap());
    p2.submit(&book2, vec![target], &dispatcher).unwrap();

    let posted: Vec<Vec<u8>> = server.requests().into_iter().map(|r| r.body).collect();
    let out = work.join("collected");
    for (i, body) in posted.iter().enumerate() {
        let participant = if i < 2 { "P1" } else { "P2" };
        let dir = out.join(participant);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join(format!("{i}.json")), body).unwrap();
    }
    let report = DatasetReport::build(&Dataset::load(&out).unwrap());
    EndToEnd {
        report_text: report.render_text(),
        report_json: report.to_json(),
        previews,
        posted,
    }
}

/// Compares `actual` with a golden file; `UCDS_UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden(name);
    if std::env::var_os("UCDS_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{name} differs from golden file:\n{actual}"))
    }
}

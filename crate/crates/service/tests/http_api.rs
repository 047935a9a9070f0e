mod common;

use std::net::SocketAddr;
use std::sync::mpsc;

use common::*;
use reqwest::blocking::{Client, Response};
use serde_json::Value;
use ucds_service::http::{self, AppState};
use ucds_service::{Dispatcher, Importer, ReviewSession, Target};

trait JsonValue {
    fn json_value(self) -> Value;
}

impl JsonValue for Response {
    fn json_value(self) -> Value {
        serde_json::from_slice(&self.bytes().unwrap()).unwrap()
    }
}

struct Api {
    addr: SocketAddr,
    client: Client,
}

impl Api {
    fn start(importer: Importer, targets: Vec<Target>) -> Api {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            // Blocking HTTP clients must be created and dropped outside the runtime.
            let state = AppState::new(ReviewSession::in_memory(), importer, Dispatcher::default(), targets);
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async {
                let listener = http::bind(0).await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                http::serve(listener, state.clone()).await.unwrap();
            });
        });
        Api {
            addr: rx.recv().unwrap(),
            client: Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    fn get(&self, path: &str) -> Response {
        self.client.get(self.url(path)).send().unwrap()
    }

    fn delete(&self, path: &str) -> Response {
        self.client.delete(self.url(path)).send().unwrap()
    }

    fn post_json(&self, path: &str, body: &str) -> Response {
        self.client
            .post(self.url(path))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap()
    }

    fn upload(&self, field: &str, content: &[u8]) -> Response {
        let boundary = "ucdsboundary7MA4YWxkTrZu0gW";
        let mut body = format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"{field}\"; filename=\"chat.txt\"\r\nContent-Type: text/plain\r\n\r\n"
        )
        .into_bytes();
        body.extend_from_slice(content);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        self.client
            .post(self.url("/chats"))
            .header("content-type", format!("multipart/form-data; boundary={boundary}"))
            .body(body)
            .send()
            .unwrap()
    }

    fn import(&self, fixture_name: &str) -> String {
        let resp = self.upload("file", &std::fs::read(fixture(fixture_name)).unwrap());
        assert_eq!(resp.status(), 201);
        resp.json_value()["chat_id"].as_str().unwrap().to_string()
    }
}

fn error_kind(resp: Response) -> (u16, String) {
    let status = resp.status().as_u16();
    let body: Value = resp.json_value();
    (status, body["error"].as_str().unwrap_or_default().to_string())
}

#[test]
fn binds_loopback_only() {
    let api = Api::start(offline_importer(), vec![]);
    assert!(api.addr.ip().is_loopback());
}

#[test]
fn import_list_and_get() {
    let api = Api::start(offline_importer(), vec![]);
    assert_eq!(api.get("/chats").json_value(), serde_json::json!([]));
    let a = api.import(TRIP);
    let b = api.import(BOOK_CLUB);
    let list: Value = api.get("/chats").json_value();
    assert_eq!(list[0]["chat_label"], "A");
    assert_eq!(list[1]["chat_label"], "B");
    assert_eq!(list[0]["chat_id"], a.as_str());
    assert_eq!(list[1]["state"], "imported");

    let chat: Value = api.get(&format!("/chats/{b}")).json_value();
    assert_eq!(chat["state"], "reviewed");
    assert_eq!(chat["chat"]["schema_version"], 1);
    assert_eq!(chat["chat"]["num_users"], 3);
    assert_eq!(chat["chat"]["urls"].as_array().unwrap().len(), 5);
}

#[test]
fn import_errors() {
    let api = Api::start(offline_importer().with_max_bytes(4096), vec![]);
    assert_eq!(error_kind(api.upload("file", b"")), (422, "empty_export".into()));
    assert_eq!(error_kind(api.upload("file", b"no chat here\n")), (422, "unparseable_export".into()));
    assert_eq!(error_kind(api.upload("other", b"x")), (400, "bad_upload".into()));
    assert_eq!(error_kind(api.upload("file", &[b'a'; 5000])), (413, "oversized".into()));
    assert_eq!(api.get("/chats").json_value(), serde_json::json!([]));
}

#[test]
fn unknown_chat_is_404() {
    let api = Api::start(offline_importer(), vec![]);
    assert_eq!(error_kind(api.get("/chats/abc")), (404, "unknown_chat".into()));
    assert_eq!(error_kind(api.get("/chats/abc/preview")), (404, "unknown_chat".into()));
    assert_eq!(error_kind(api.delete("/chats/abc/urls/0")), (404, "unknown_chat".into()));
    assert_eq!(error_kind(api.post_json("/chats/abc/submit", "")), (404, "unknown_chat".into()));
}

#[test]
fn delete_then_submit_sends_the_preview() {
    let server = collector();
    let api = Api::start(offline_importer(), vec![Target::Http(server.url("/in"))]);
    let id = api.import(TRIP);

    let resp: Value = api.delete(&format!("/chats/{id}/urls/2")).json_value();
    assert_eq!(resp["removed"]["domain"], "booking.com");
    assert_eq!(resp["chat"]["edited"], true);
    assert_eq!(resp["chat"]["urls"], 6);
    assert_eq!(error_kind(api.delete(&format!("/chats/{id}/urls/6"))), (404, "index_out_of_range".into()));

    let preview = api.get(&format!("/chats/{id}/preview"));
    assert_eq!(preview.headers()["content-type"], "application/json");
    let preview = preview.bytes().unwrap().to_vec();
    let receipt: Value = api.post_json(&format!("/chats/{id}/submit"), "").json_value();
    assert_eq!(receipt["targets"], serde_json::json!([server.url("/in")]));
    assert_eq!(server.requests()[0].body, preview);
    assert_eq!(preview, api.get(&format!("/chats/{id}/preview")).bytes().unwrap().to_vec());

    assert_eq!(error_kind(api.post_json(&format!("/chats/{id}/submit"), "")), (409, "already_submitted".into()));
    assert_eq!(error_kind(api.delete(&format!("/chats/{id}/urls/0"))), (409, "already_submitted".into()));
    let chat: Value = api.get(&format!("/chats/{id}")).json_value();
    assert_eq!(chat["state"], "submitted");
    assert_eq!(chat["receipt"]["bytes"], preview.len());
    assert_eq!(server.hits(), 1);
}

#[test]
fn submit_targets_and_failures() {
    let api = Api::start(offline_importer(), vec![]);
    let id = api.import(TRIP);
    assert_eq!(error_kind(api.post_json(&format!("/chats/{id}/submit"), "")), (400, "no_targets".into()));
    assert_eq!(error_kind(api.post_json(&format!("/chats/{id}/submit"), "{\"targets\": 3}")), (400, "bad_request".into()));

    let closed = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let body = format!("{{\"targets\": [\"http://{closed}/\"]}}");
    assert_eq!(error_kind(api.post_json(&format!("/chats/{id}/submit"), &body)), (502, "target_unreachable".into()));
    let chat: Value = api.get(&format!("/chats/{id}")).json_value();
    assert_eq!(chat["state"], "reviewed");

    let server = collector();
    let body = format!("{{\"targets\": [\"{}\"]}}", server.url("/x"));
    let resp = api.post_json(&format!("/chats/{id}/submit"), &body);
    assert_eq!(resp.status(), 200);
    assert_eq!(server.hits(), 1);
}

#[test]
fn concurrent_edits_are_serialized() {
    let api = Api::start(offline_importer(), vec![]);
    let id = api.import(TRIP);
    let url = api.url(&format!("/chats/{id}/urls/0"));
    let list_url = api.url("/chats");
    let handles: Vec<_> = (0..10)
        .map(|i| {
            let (url, list_url) = (url.clone(), list_url.clone());
            std::thread::spawn(move || {
                let client = Client::new();
                if i % 2 == 0 {
                    client.delete(&url).send().unwrap().status().as_u16()
                } else {
                    client.get(&list_url).send().unwrap().status().as_u16()
                }
            })
        })
        .collect();
    let statuses: Vec<u16> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(statuses.iter().all(|&s| s == 200), "{statuses:?}");
    let chat: Value = api.get(&format!("/chats/{id}")).json_value();
    assert_eq!(chat["chat"]["urls"].as_array().unwrap().len(), 2);
    let payload = api.get(&format!("/chats/{id}/preview")).bytes().unwrap();
    ucds_core::payload::from_slice(&payload).unwrap();
}

#[test]
fn responses_carry_no_names() {
    let api = Api::start(offline_importer(), vec![]);
    let mut bodies = vec![api.upload("file", &std::fs::read(fixture(TRIP)).unwrap()).text().unwrap()];
    let id = api.import(BOOK_CLUB);
    for path in ["/chats".to_string(), format!("/chats/{id}"), format!("/chats/{id}/preview")] {
        bodies.push(api.get(&path).text().unwrap());
    }
    bodies.push(api.delete(&format!("/chats/{id}/urls/0")).text().unwrap());
    for body in bodies {
        for name in FIXTURE_NAMES {
            assert!(!body.contains(name), "{name} in {body}");
        }
        for fragment in ["Reading list", "Things_Fall_Apart", "itinerary", "14:05"] {
            assert!(!body.contains(fragment), "{fragment} in {body}");
        }
    }
}

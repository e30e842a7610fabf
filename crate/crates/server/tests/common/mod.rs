#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::mpsc;

use ae_server::{AppState, ModelHandle};

/// Starts a server on an ephemeral port and returns its base URL.
pub fn spawn(models: Vec<(String, ModelHandle)>) -> String {
    let (tx, rx) = mpsc::channel();
    let state = AppState::new(models);
    std::thread::spawn(move || {
        let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
        ae_server::run_blocking(addr, state, |bound| tx.send(bound).unwrap()).unwrap();
    });
    format!("http://{}", rx.recv().unwrap())
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub fn get(url: &str) -> (u16, serde_json::Value) {
    let mut r = agent().get(url).call().unwrap();
    (r.status().as_u16(), r.body_mut().read_json().unwrap())
}

pub fn post(url: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
    let mut r = agent().post(url).send_json(&body).unwrap();
    (r.status().as_u16(), r.body_mut().read_json().unwrap())
}

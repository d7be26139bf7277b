use wsnsec::isa::{Scenario, ScenarioPolicy};
use wsnsec::sim::{compare_fixed_vs_adaptive, run, AdversaryBehavior, AdversarySpec, SimConfig};
use wsnsec::NodeAddress;

fn addr(s: &str) -> NodeAddress {
    s.parse().unwrap()
}

fn small(nodes: u32, frames: u64) -> SimConfig {
    SimConfig {
        node_count: nodes,
        group_count: 1,
        sim_length: frames,
        ..SimConfig::default()
    }
}

fn with_adversary(mut c: SimConfig, node: &str, behavior: AdversaryBehavior) -> SimConfig {
    c.adversaries.push(AdversarySpec {
        node: addr(node),
        behavior,
        start_frame: 0,
    });
    c
}

#[test]
fn zero_frames_spend_nothing() {
    let r = run(&small(5, 0)).unwrap();
    assert_eq!(r.frames, 0);
    assert_eq!(r.nodes.len(), 5);
    assert_eq!(r.total_energy(), 0.0);
    assert_eq!(r.packets_sent, 0);
}

#[test]
fn two_nodes_match_hand_computed_ledger() {
    let c = SimConfig {
        beacon: false,
        uplink: false,
        adaptive: false,
        session_length: 1000,
        ..small(2, 10)
    };
    let r = run(&c).unwrap();
    // Every packet is 10 payload octets at RC5-12 with a MAC: 5 + 10 + 4
    // octets on the wire, and one seal or open is 6 block calls of 12 rounds
    // plus the MAC charge.
    let wire = 19.0;
    let pass = 6.0 * 12.0 * 2e-6 + 1e-5;
    let (tx, rx) = (0.0006 * wire, 0.0003 * wire);

    // Head: the frame-0 key-material unicast, ten data packets received and
    // opened, ten own readings sealed.
    let head = r.node(addr("0:0")).unwrap().ledger;
    assert!((head.tx - tx).abs() < 1e-12, "{head:?}");
    assert!((head.rx - 10.0 * rx).abs() < 1e-12, "{head:?}");
    assert!((head.crypto - 21.0 * pass).abs() < 1e-12, "{head:?}");

    // Member: ten data packets sent, the key material received and opened.
    let member = r.node(addr("0:1")).unwrap().ledger;
    assert!((member.tx - 10.0 * tx).abs() < 1e-12, "{member:?}");
    assert!((member.rx - rx).abs() < 1e-12, "{member:?}");
    assert!((member.crypto - 11.0 * pass).abs() < 1e-12, "{member:?}");

    assert_eq!(r.packets_sent, 11);
    assert_eq!(r.packets_accepted, 11);
}

#[test]
fn single_node_spends_crypto_only() {
    for s in Scenario::BUILTIN {
        let mut c = small(1, 50);
        c.scenario = ScenarioPolicy::builtin(&s, c.energy_model.initial_energy).unwrap();
        let cmp = compare_fixed_vs_adaptive(&c).unwrap();
        for rep in [&cmp.fixed, &cmp.adaptive] {
            let t = rep.totals();
            assert_eq!(t.tx, 0.0);
            assert_eq!(t.rx, 0.0);
            assert!(t.crypto > 0.0);
        }
        match s {
            Scenario::MilitarySurveillance => assert_eq!(cmp.saving_percent(), 0.0),
            _ => assert!(cmp.saving_percent() > 0.0, "{}", cmp.summary()),
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let c = with_adversary(SimConfig::default(), "1:3", AdversaryBehavior::DropFraction(0.5));
    let a = run(&c).unwrap();
    let b = run(&c).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.summary(), b.summary());
    assert_eq!(a.elections, b.elections);
    assert_eq!(a.rekeys, b.rekeys);
    let other = run(&SimConfig { seed: 2, ..c }).unwrap();
    assert_ne!(a.to_csv(), other.to_csv());
}

#[test]
fn config_round_trips_through_toml() {
    let c = with_adversary(small(6, 20), "0:4", AdversaryBehavior::ReplayAttacker);
    let back = SimConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
    assert_eq!(run(&back).unwrap().to_csv(), run(&c).unwrap().to_csv());
}

#[test]
fn no_tdm_conflicts_and_no_bad_observations() {
    let mut c = with_adversary(SimConfig::default(), "0:5", AdversaryBehavior::ReplayAttacker);
    c = with_adversary(c, "1:2", AdversaryBehavior::DropFraction(1.0));
    c = with_adversary(c, "1:7", AdversaryBehavior::Captured);
    let r = run(&c).unwrap();
    assert_eq!(r.tdm_conflicts, 0);
    assert_eq!(r.observation_errors, 0);
}

#[test]
fn replayed_packets_are_never_accepted() {
    let c = with_adversary(small(6, 200), "0:3", AdversaryBehavior::ReplayAttacker);
    let r = run(&c).unwrap();
    assert!(r.replays_injected > 100);
    assert_eq!(r.replays_accepted, 0);
    assert!(r.replays_rejected > 0);
}

#[test]
fn captured_node_is_flagged() {
    let bad = addr("0:3");
    let c = with_adversary(small(5, 5), "0:3", AdversaryBehavior::Captured);
    let r = run(&c).unwrap();
    assert!(r.suspicious_samples > 0);
    for (observer, table) in &r.trust {
        if *observer != bad {
            assert!(table.is_suspicious(bad), "{observer}");
            assert_eq!(table.effective_trust(bad), Some(0.0));
        }
    }
}

#[test]
fn dropper_trust_falls_below_honest_within_two_frames() {
    let bad = addr("0:2");
    let c = with_adversary(small(5, 2), "0:2", AdversaryBehavior::DropFraction(1.0));
    let r = run(&c).unwrap();
    for (observer, table) in &r.trust {
        if *observer == bad {
            continue;
        }
        let t_bad = table.trust(bad).unwrap();
        for honest in table.neighbors().filter(|n| *n != bad) {
            let t = table.trust(honest).unwrap();
            assert!(t_bad < t, "{observer}: {bad}={t_bad} vs {honest}={t}");
        }
    }
}

#[test]
fn honest_network_excludes_nobody() {
    let r = run(&SimConfig {
        session_length: 20,
        sim_length: 200,
        ..SimConfig::default()
    })
    .unwrap();
    assert!(r.rekeys.len() >= 2 * 10);
    for k in &r.rekeys {
        assert!(k.excluded.is_empty(), "{k:?}");
        assert_eq!(k.delivered, k.recipients);
    }
}

#[test]
fn excluded_dropper_decodes_nothing_afterwards() {
    let bad = addr("0:2");
    let c = SimConfig {
        session_length: 10,
        ..with_adversary(small(5, 60), "0:2", AdversaryBehavior::DropFraction(1.0))
    };
    let r = run(&c).unwrap();
    let first_excluded = r
        .rekeys
        .iter()
        .find(|k| k.excluded.contains(&bad))
        .map(|k| k.session)
        .expect("dropper excluded at some re-key");
    assert!(r
        .rekeys
        .iter()
        .filter(|k| k.session >= first_excluded)
        .all(|k| k.excluded.contains(&bad)));
    assert_eq!(r.broadcasts_decoded_since(bad, first_excluded), 0);
    assert!(r.broadcasts_decoded_since(addr("0:1"), first_excluded) > 0);
    assert!(r.elections.iter().all(|e| e.head != bad));
}

#[test]
fn batteries_never_go_negative() {
    let mut c = small(6, 300);
    c.energy_model.initial_energy = 0.5;
    c.scenario = ScenarioPolicy::habitat(0.5);
    let r = run(&c).unwrap();
    assert!(r.nodes.iter().any(|n| !n.alive));
    for n in &r.nodes {
        assert!(n.remaining >= 0.0);
        assert!((n.ledger.total() + n.remaining - 0.5).abs() < 1e-9, "{n:?}");
    }
}

#[test]
fn head_failover_after_death() {
    let mut c = small(6, 400);
    c.energy_model.initial_energy = 2.0;
    c.scenario = ScenarioPolicy::habitat(2.0);
    c.rotate_heads = false;
    c.session_length = 1000;
    let r = run(&c).unwrap();
    assert!(!r.elections.is_empty());
    assert!(r.elections.iter().all(|e| e.head != e.previous));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(run(&SimConfig {
        node_count: 0,
        ..SimConfig::default()
    })
    .is_err());
    assert!(run(&SimConfig {
        slots_per_frame: 5,
        ..SimConfig::default()
    })
    .is_err());
    assert!(run(&SimConfig {
        group_count: 21,
        ..SimConfig::default()
    })
    .is_err());
    assert!(SimConfig::from_toml("bogus = 1").is_err());
}

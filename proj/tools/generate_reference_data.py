#!/usr/bin/env python3
"""Regenerates the bundled reference inputs under data/.

The network is the standard 33-bus radial feeder (line impedances in ohms,
converted to per-unit on a 10 MVA / 12.66 kV base). The demand, price,
temperature and DG availability profiles are synthetic 24-step curves with
typical daily shapes; they are placeholders, not measurements.
"""
import json
import math
import os

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

# from, to (1-indexed), R_ohm, X_ohm
BRANCHES = [
    (1, 2, 0.0922, 0.0470), (2, 3, 0.4930, 0.2511), (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941), (5, 6, 0.8190, 0.7070), (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351), (8, 9, 1.0300, 0.7400), (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650), (11, 12, 0.3744, 0.1238), (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129), (14, 15, 0.5910, 0.5260), (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210), (17, 18, 0.7320, 0.5740), (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554), (20, 21, 0.4095, 0.4784), (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083), (23, 24, 0.8980, 0.7091), (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034), (26, 27, 0.2842, 0.1447), (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006), (29, 30, 0.5075, 0.2585), (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619), (32, 33, 0.3410, 0.5302),
]

BASE_MVA = 10.0
BASE_KV = 12.66
Z_BASE = BASE_KV * BASE_KV / BASE_MVA

HVAC_BUSES = [5, 10, 15, 20, 25, 30]
DG_BUSES = [17, 32]
T = 24


def network():
    return {
        "buses": [{"index": i, "is_root": i == 0} for i in range(33)],
        "branches": [
            {"from": f - 1, "to": t - 1,
             "r_pu": round(r / Z_BASE, 10), "x_pu": round(x / Z_BASE, 10)}
            for f, t, r, x in BRANCHES
        ],
        "root_voltage_pu": 1.0,
        "v_min_pu": 0.9,
        "v_max_pu": 1.1,
        "s_max_pu": 0.4,  # 4 MW
        "base_mva": BASE_MVA,
        "base_kv": BASE_KV,
    }


def demand_shape(t, phase):
    # Two-peak weekday curve between roughly 0.45 and 1.0.
    morning = math.exp(-((t - 9.0 - phase) ** 2) / 8.0)
    evening = math.exp(-((t - 19.0 - phase) ** 2) / 6.0)
    return 0.45 + 0.35 * morning + 0.55 * evening


def solar_shape(t):
    if t < 6 or t > 19:
        return 0.0
    return math.exp(-((t - 13.0) ** 2) / 9.0)


def scenario():
    buildings = [
        {
            "bus": bus,
            "heat_capacity_mwh_per_degc": 1.0,
            "heat_transfer_mw_per_degc": 0.03,
            "cop": 6.0,
            "power_factor": 0.98,
            "theta_min_degc": 24.0,
            "theta_max_degc": 28.0,
            "p_hvac_max_mw": 0.1,
            "theta_init_degc": 26.0,
        }
        for bus in HVAC_BUSES
    ]
    loads = []
    for i, bus in enumerate(HVAC_BUSES):
        phase = 0.4 * (i - 2.5)
        p = [round(0.05 * demand_shape(t, phase), 6) for t in range(T)]
        q = [round(0.4 * v, 6) for v in p]
        loads.append({"bus": bus, "p_d_pu": p, "q_d_pu": q})
    theta_out = [round(24.0 + 9.0 * math.exp(-((t - 15.0) ** 2) / 18.0), 4) for t in range(T)]
    q_heat = [round(0.01 + 0.03 * math.exp(-((t - 13.0) ** 2) / 16.0), 6) for t in range(T)]
    eta_buy = []
    for t in range(T):
        if t < 6 or t >= 23:
            eta_buy.append(40.0)
        elif 17 <= t < 22:
            eta_buy.append(120.0)
        else:
            eta_buy.append(80.0)
    eta_sell = [round(0.4 * v, 4) for v in eta_buy]
    dgs = [
        {"bus": bus, "g_avail_pu": [round(0.12 * solar_shape(t), 6) for t in range(T)]}
        for bus in DG_BUSES
    ]
    return {
        "buildings": buildings,
        "series": {"theta_out_degc": theta_out, "q_heat_mw": q_heat, "loads": loads},
        "dgs": dgs,
        "tariffs": {"eta_buy_per_mwh": eta_buy, "eta_sell_per_mwh": eta_sell},
        "dt_hours": 1.0,
    }


def desk_slice(sc, start, length):
    """Midday window of the reference profiles, for short studies and tests."""
    out = json.loads(json.dumps(sc))
    sl = slice(start, start + length)
    out["series"]["theta_out_degc"] = sc["series"]["theta_out_degc"][sl]
    out["series"]["q_heat_mw"] = sc["series"]["q_heat_mw"][sl]
    for load in out["series"]["loads"]:
        load["p_d_pu"] = load["p_d_pu"][sl]
        load["q_d_pu"] = load["q_d_pu"][sl]
    for dg in out["dgs"]:
        dg["g_avail_pu"] = dg["g_avail_pu"][sl]
    out["tariffs"]["eta_buy_per_mwh"] = sc["tariffs"]["eta_buy_per_mwh"][sl]
    out["tariffs"]["eta_sell_per_mwh"] = sc["tariffs"]["eta_sell_per_mwh"][sl]
    return out


def config():
    return {
        "network": "ieee33.json",
        "scenario": "reference_scenario.json",
        "out_dir": "../runs/reference",
        "seed": 1,
        "dataset": {"samples": 20000, "margin": 0.05},
        "vio_mlp": {"layers": [6, 6, 6], "epochs": 160, "batch": 256, "learning_rate": 3e-3},
        "loss_mlp": {"layers": [3, 3, 3], "epochs": 160, "batch": 256, "learning_rate": 3e-3},
        "solve": {"dg_scales": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], "steps": -1, "rel_gap": 1e-4,
                  "node_limit": 2000000},
        "simplify": {"redundancy_tol": 1e-7},
    }


def desk_config():
    # Short-horizon study: small violation net keeps the union compact, so
    # both formulations solve to proven optimality in seconds per scenario.
    cfg = config()
    cfg["scenario"] = "desk_scenario.json"
    cfg["out_dir"] = "../runs/desk"
    cfg["vio_mlp"]["layers"] = [4, 4]
    cfg["solve"]["rel_gap"] = 0.0
    return cfg


def main():
    os.makedirs(HERE, exist_ok=True)
    sc = scenario()
    files = {
        "ieee33.json": network(),
        "reference_scenario.json": sc,
        "reference_config.json": config(),
        "desk_scenario.json": desk_slice(sc, 12, 6),
        "desk_config.json": desk_config(),
    }
    for name, payload in files.items():
        with open(os.path.join(HERE, name), "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    print("wrote", ", ".join("data/" + n for n in files))


if __name__ == "__main__":
    main()

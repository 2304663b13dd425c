#!/usr/bin/env python3
"""Writes the synthetic season exports under data/.

The numbers are invented; they only mimic the shape of real top-five-league
player tables so the pipeline and both models can be exercised end to end.
"""
import csv
import os

import numpy as np

COLUMNS = ["PLAYER", "CLUB", "LEAGUE", "POS", "CURRENT_AGE", "STARTS", "MIN", "GLS", "AST", "CRDY",
           "CRDR", "SOT", "G_SH", "PASS_ATT", "CMP_PER", "TKLW", "BLOCKS", "INT", "CLR", "DRIBBLE_ATT",
           "DRIBBLE_SUCC_PER", "CARRIES", "TARG", "REC_PER", "LEAGUE_RANK", "UCL_RANK",
           "LEAGUECUP_RANK", "WEEKLY_GROSS"]

LEAGUES = {
    "Premier League": ["Arsenal", "Brentford", "Everton", "Fulham"],
    "Bundesliga": ["Augsburg", "Bochum", "Freiburg", "Mainz"],
    "La Liga": ["Alaves", "Betis", "Getafe", "Osasuna"],
    "League 1": ["Angers", "Brest", "Lens", "Nantes"],
    "Series A": ["AC Milan", "Bologna", "Empoli", "Torino"],
}
POSITIONS = ["Defenders", "Midfields", "Strikes"]
FIRST = ["Aaron", "Abdou", "Adam", "Ben", "Carlos", "Dani", "Emil", "Fede", "Goran", "Hugo", "Ivan",
         "Jonas", "Kai", "Luca", "Marco", "Nico", "Omar", "Pedro", "Rafa", "Sami", "Theo", "Yann"]
LAST = ["Dia", "Ram", "Cre", "Hick", "War", "Silva", "Moreau", "Rossi", "Muller", "Garcia", "Smith",
        "Lopez", "Bauer", "Conti", "Dubois", "Keller", "Vidal", "Marsh"]


def player_rows(rng, n_per_club):
    league_effect = {lg: rng.normal(0, 15000) for lg in LEAGUES}
    club_effect = {c: rng.normal(0, 12000) for clubs in LEAGUES.values() for c in clubs}
    names = set()
    players = []
    for league, clubs in LEAGUES.items():
        for club in clubs:
            for _ in range(n_per_club):
                while True:
                    name = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
                    if name not in names:
                        names.add(name)
                        break
                players.append({"PLAYER": name, "CLUB": club, "LEAGUE": league,
                                "POS": POSITIONS[rng.integers(0, 3)],
                                "AGE": int(rng.integers(18, 35)),
                                "SKILL": rng.normal(0, 1)})
    return players, league_effect, club_effect


def season_row(rng, p, league_effect, club_effect, ranks, minutes=None):
    pos = POSITIONS.index(p["POS"]) + 1
    skill = p["SKILL"]
    starts = int(np.clip(rng.normal(20 + 6 * skill, 6), 1, 38))
    mins = minutes if minutes is not None else int(np.clip(starts * 85 + rng.normal(0, 120), 95, 3420))
    gls = max(0, int(rng.poisson(max(0.2, (pos - 1) * 3 + 2 * skill + 1))))
    sot = max(gls, int(rng.poisson(gls * 2.5 + 1)))
    shots = sot + int(rng.poisson(sot + 1))
    g_sh = round(gls / shots, 3) if shots else 0.0
    pass_att = int(np.clip(rng.normal(900 + 250 * skill, 200), 50, 2500))
    row = {
        "PLAYER": p["PLAYER"], "CLUB": p["CLUB"], "LEAGUE": p["LEAGUE"], "POS": p["POS"],
        "CURRENT_AGE": p["AGE"], "STARTS": starts, "MIN": mins, "GLS": gls,
        "AST": int(rng.poisson(max(0.3, 2 + skill))), "CRDY": int(rng.poisson(3)),
        "CRDR": int(rng.poisson(0.15)), "SOT": sot, "G_SH": g_sh, "PASS_ATT": pass_att,
        "CMP_PER": round(float(np.clip(rng.normal(78 + 3 * skill, 6), 40, 96)), 1),
        "TKLW": int(rng.poisson(max(0.5, (4 - pos) * 8))), "BLOCKS": int(rng.poisson(8)),
        "INT": int(rng.poisson(max(0.5, (4 - pos) * 6))), "CLR": int(rng.poisson(max(0.5, (4 - pos) * 15))),
        "DRIBBLE_ATT": int(rng.poisson(max(0.5, pos * 10))),
        "DRIBBLE_SUCC_PER": round(float(np.clip(rng.normal(55, 12), 0, 100)), 1),
        "CARRIES": int(np.clip(rng.normal(600 + 150 * skill, 120), 20, 2000)),
        "TARG": int(np.clip(rng.normal(500 + 120 * skill, 100), 10, 1500)),
        "REC_PER": round(float(np.clip(rng.normal(70, 10), 0, 100)), 1),
    }
    row.update(ranks[p["CLUB"]])
    lr, ur, cr = (ranks[p["CLUB"]][k] for k in ("LEAGUE_RANK", "UCL_RANK", "LEAGUECUP_RANK"))
    grade = 4.5 / lr + (4.5 / ur if ur != "" else 0) + (1 / cr if cr != "" else 0)
    salary = (20000 + 1800 * (p["AGE"] - 18) + 6000 * pos + 4000 * gls + 2500 * row["AST"]
              + 12 * pass_att + 9000 * grade + 20000 * skill
              + league_effect[p["LEAGUE"]] + club_effect[p["CLUB"]] + rng.normal(0, 15000))
    row["WEEKLY_GROSS"] = int(max(1500, round(salary)))
    return row


def club_ranks(rng):
    ranks = {}
    for league, clubs in LEAGUES.items():
        order = rng.permutation(len(clubs))
        for i, club in enumerate(clubs):
            league_rank = int(order[i]) * 4 + int(rng.integers(1, 5))
            ucl = int(rng.integers(1, 17)) if league_rank <= 4 else ""
            cup = int(rng.integers(1, 17)) if rng.random() < 0.6 else ""
            ranks[club] = {"LEAGUE_RANK": league_rank, "UCL_RANK": ucl, "LEAGUECUP_RANK": cup}
    return ranks


def write(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def main():
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(20230601)
    players, league_effect, club_effect = player_rows(rng, 8)
    all_clubs = [(lg, c) for lg, cs in LEAGUES.items() for c in cs]

    for s, season in enumerate(["2020-2021", "2021-2022", "2022-2023"]):
        ranks = club_ranks(rng)
        rows = []
        for i, p in enumerate(players):
            if (i + s) % 11 == 0:
                continue  # not in this season's tables
            minutes = None
            if (i + 3 * s) % 17 == 0:
                minutes = int(rng.integers(0, 91))  # fails the 90-minute filter
            rows.append(season_row(rng, p, league_effect, club_effect, ranks, minutes))
        for r in rows[5::23]:
            r["WEEKLY_GROSS"] = ""  # no salary entry
        write(os.path.join(out, f"season_{season}.csv"), rows)
        for p in players:
            p["AGE"] += 1
        if s < 2:
            for p in players[3::29]:
                league, club = all_clubs[int(rng.integers(0, len(all_clubs)))]
                p["LEAGUE"], p["CLUB"] = league, club  # transfer before next season

    ranks = club_ranks(rng)
    small = [season_row(rng, p, league_effect, club_effect, ranks) for p in players[:30]]
    write(os.path.join(out, "fixture_30.csv"), small)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerates data/sample_corpus.jsonl and data/sample_embeddings.txt."""

import json
import pathlib
import re

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"

DOCS = [
    ("news-001", "Walkouts spread across the country",
     "Rail workers walked out on Monday as the rail union called national strikes over pay. "
     "The walkouts halted freight and commuter trains, and the union said the strikes would continue "
     "until the railway operators return to talks. Unrest among rail staff has grown for months."),
    ("news-002", "Transport union votes for action",
     "Members of the transport union voted for walkouts on the railway network. "
     "Union leaders said rail strikes were a last resort after talks with the operators broke down. "
     "Commuters were told to expect cancelled trains."),
    ("news-003", "Commuters face delays as trains are cancelled",
     "Thousands of commuters faced long delays after the operator cancelled trains during the strikes. "
     "Station staff said the rail service would be reduced for the rest of the week."),
    ("news-004", "Miners stay out at northern pits",
     "Coal miners extended their strikes for a third week. The mining union said pay talks had failed "
     "and that the walkouts would also affect power stations that rely on coal deliveries."),
    ("news-005", "New high speed rail line approved",
     "The government approved a new high speed rail line linking the two largest cities. "
     "Construction of the railway is expected to create jobs and shorten journey times for passengers."),
    ("news-006", "Jaguar sightings rise in the rainforest",
     "Researchers recorded more jaguar sightings this year as the big cats returned to protected areas "
     "of the rainforest. The animals hunt deer and other prey along the river banks."),
    ("news-007", "Local election results announced",
     "Voters returned the governing party to power in the local election. Turnout was low and the "
     "opposition said it would review its campaign strategy for the next state election."),
    ("news-008", "Storm warning issued for the coast",
     "Forecasters issued a storm warning for the coast with heavy rain and strong winds expected overnight. "
     "Residents were told to stay indoors and avoid travel."),
    ("news-009", "Dock workers join the action",
     "Dock workers joined the wider transport strikes, leaving ships waiting outside the port. "
     "The union said the action was in solidarity with rail staff and would last two days."),
    ("news-010", "Freight operators count the cost of unrest",
     "Freight operators said the rail unrest had cost millions as goods trains stood idle. "
     "Business groups urged the union and the railway companies to settle the dispute over pay and jobs."),
    ("news-011", "Recipe: slow cooked bean stew",
     "This slow cooked stew uses beans, onions, garlic and smoked paprika. Simmer for two hours "
     "and serve with fresh bread for a warming winter meal."),
    ("news-012", "Teachers consider action over workload",
     "Teachers in several districts said they would consider strikes over rising workload and pay. "
     "The teaching union will ballot members next month, and schools may close if walkouts go ahead."),
]

TOPICS = {
    "labour": ["strike", "strikes", "union", "walkouts", "walked", "unrest", "pay", "talks", "ballot",
               "dispute", "solidarity", "action", "workers", "members", "leaders", "staff", "miners"],
    "rail": ["rail", "railway", "trains", "train", "freight", "commuter", "commuters", "station",
             "passengers", "operator", "operators", "line", "transport", "journey", "service", "goods"],
    "nature": ["jaguar", "rainforest", "cats", "animals", "deer", "prey", "river", "banks", "hunt"],
    "politics": ["election", "voters", "party", "government", "opposition", "campaign", "turnout", "state"],
    "weather": ["storm", "rain", "winds", "forecasters", "coast", "overnight", "warning"],
    "food": ["stew", "beans", "onions", "garlic", "paprika", "bread", "meal", "recipe", "cooked"],
}


def tokenize(text):
    return [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t]


def main():
    ROOT.mkdir(exist_ok=True)
    with open(ROOT / "sample_corpus.jsonl", "w", encoding="utf-8") as out:
        for doc_id, title, body in DOCS:
            out.write(json.dumps({"doc_id": doc_id, "title": title, "body": body}) + "\n")

    vocab = sorted({t for _, title, body in DOCS for t in tokenize(title + " " + body)})
    rng = np.random.default_rng(1989)
    dim = 16
    centers = {name: rng.normal(size=dim) for name in TOPICS}
    topic_of = {w: name for name, words in TOPICS.items() for w in words}
    with open(ROOT / "sample_embeddings.txt", "w", encoding="utf-8") as out:
        for word in vocab:
            noise = rng.normal(scale=0.35 if word in topic_of else 1.0, size=dim)
            vec = noise + (centers[topic_of[word]] if word in topic_of else 0.0)
            out.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerates the template-bot fixture and its held-out evaluation utterances.

Each intent's utterance pool is split into a training set and a disjoint
held-out set. Retraining is evaluated on paraphrases of the held-out set.

    python3 scripts/make_fixture.py crates/core/fixtures
"""

import json
import random
import sys
from pathlib import Path

TRAIN_PER_INTENT = 150
EVAL_PER_INTENT = 80

VP_FRAMES = [
    "{vp}",
    "i want to {vp}",
    "i need to {vp}",
    "can i {vp}",
    "i would like to {vp}",
    "help me {vp}",
    "how do i {vp}",
    "could you help me {vp}",
    "hi, i need to {vp}",
    "hello, can you {vp}",
    "i'd like to {vp} today",
    "is it possible to {vp}",
    "please {vp}",
    "i am trying to {vp}",
    "need to {vp}",
]
NP_FRAMES = [
    "{np}",
    "{np} please",
    "i need {np}",
    "question about {np}",
    "hi, {np}",
    "i have a question about {np}",
    "{np}, please help",
]

INTENTS = {
    "TA": {
        "dialog": "Transfer_To_Agent",
        "vp": ["talk to an agent", "speak to an agent", "talk with a live agent", "speak with an agent",
               "transfer to an agent", "get an agent", "talk to your agent", "be transferred to an agent",
               "connect to an agent now", "speak to a live agent", "chat with an agent",
               "get a live agent", "talk to someone from support", "speak to someone"],
        "np": ["an agent", "a live agent", "agent", "transfer to agent", "live agent please", "agent now"],
    },
    "EC": {
        "dialog": "End_Chat",
        "vp": ["end the chat", "end this chat", "end chat now", "say bye", "be done with the chat",
               "end our chat", "leave the chat", "end the chat, thanks", "be done here", "end the chat for now",
               "end this conversation", "wrap up the chat", "end the session", "say thanks and bye"],
        "np": ["bye", "thanks, bye", "done", "i am done", "that is all, thanks", "end chat"],
    },
    "CS": {
        "dialog": "Connect_With_Sales",
        "vp": ["buy a laptop", "buy a new phone", "get a price", "get a quote", "talk to sales",
               "buy accessories", "know the price of a laptop", "get a quote for phones", "contact sales",
               "buy in bulk", "know the price of accessories", "get a quote for a laptop", "contact your sales team",
               "buy a phone"],
        "np": ["sales", "a quote", "the price of a phone", "buying a laptop", "price list", "a price for laptops"],
    },
    "CI": {
        "dialog": "Check_Issue_Status",
        "vp": ["check my case", "check the status of my case", "check case status", "check my case status",
               "know the status of my case", "check on my case", "check my issue status", "check the case i opened",
               "check if my case is closed", "check the status of the case", "know if my case is solved",
               "check my support case", "check on the case i opened", "know my case status"],
        "np": ["case status", "my case", "status of my case", "my open case", "case update", "my support case"],
    },
    "CO": {
        "dialog": "Check_Order_Status",
        "vp": ["track my order", "check my order status", "know where my order is", "track an order",
               "see where my order is", "track the order i placed", "check where my order is",
               "track my recent order", "track where my order is", "know when my order arrives",
               "track my online order", "know where my order is now", "track the order", "follow up on my order"],
        "np": ["order status", "my order", "where is my order", "tracking my order", "order tracking",
               "my recent order"],
    },
    "RI": {
        "dialog": "Report_An_Issue",
        "vp": ["report an issue", "report a problem", "report a broken phone", "report my laptop is broken",
               "report an issue with my phone", "report a problem with my order", "report something broken",
               "report an issue with the app", "report an issue with my account",
               "report a problem with the website", "report a broken laptop", "report that my phone is broken",
               "report a problem with my laptop", "report an issue with a product"],
        "np": ["an issue", "a problem", "my phone is broken", "broken laptop", "a problem with my laptop",
               "an issue with my phone"],
    },
}


def expand(vps, nps):
    out = [f.format(vp=vp) for f in VP_FRAMES for vp in vps]
    out += [f.format(np=np) for f in NP_FRAMES for np in nps]
    seen, unique = set(), []
    for u in out:
        if u not in seen:
            seen.add(u)
            unique.append(u[0].upper() + u[1:])
    return unique


def sample(pool, k, rng, name):
    if len(pool) < k:
        sys.exit(f"{name}: only {len(pool)} distinct utterances, need {k}")
    return sorted(rng.sample(pool, k))


def say(text):
    return {"text": text, "action": "Say"}


def collect(text, slot):
    return {"text": text, "action": "Collect", "slot": slot, "entity_type": slot}


def confirm(text, slot):
    return {"text": text, "action": "Confirm", "slot": slot}


def to(target, condition="always"):
    return {"target": target, "condition": condition}


def dialogs():
    email = "May I get your email?"
    return [
        {"name": "Transfer_To_Agent", "steps": [
            say("I will transfer you to an agent."),
            collect(email, "Email"),
            say("An agent will contact you at {Email} shortly."),
        ], "transitions": [to("End_Chat")]},
        {"name": "End_Chat", "steps": [
            say("Thank you for chatting with us today."),
            say("Goodbye and have a great day!"),
        ]},
        {"name": "Connect_With_Sales", "steps": [
            say("I can connect you with our sales team."),
            collect("What is your full name?", "FullName"),
            collect(email, "Email"),
            collect("Which product line are you interested in?", "ProductLine"),
            say("Thanks, a sales representative will reach out about {ProductLine}."),
        ], "transitions": [to("End_Chat")]},
        {"name": "Check_Issue_Status", "steps": [
            say("I can help you check the status of your case."),
            collect(email, "Email"),
        ], "transitions": [to("Case_Lookup")]},
        {"name": "Case_Lookup", "is_sub_dialog": True, "steps": [
            collect("What is your case number?", "CaseNumber"),
            confirm("Just to confirm, your case number is {CaseNumber}, right?", "CaseNumber"),
            say("Your case {CaseNumber} is being worked on by our team."),
        ], "transitions": [to("End_Chat", "on_success"), to("Transfer_To_Agent", "on_failure")]},
        {"name": "Check_Order_Status", "steps": [
            say("Sure, let me look up your order."),
            collect("What is your order number?", "OrderNumber"),
            say("Your order {OrderNumber} has shipped and is on its way."),
        ], "transitions": [to("End_Chat")]},
        {"name": "Report_An_Issue", "steps": [
            say("I am sorry to hear you are having trouble."),
            collect(email, "Email"),
            collect("Please describe the issue.", "IssueDescription"),
            say("Thanks, we have logged your issue and will follow up by email."),
        ], "transitions": [to("End_Chat")]},
    ]


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/fixtures")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20220908)
    intents, held_out = [], {}
    for name, spec in INTENTS.items():
        pool = expand(spec["vp"], spec["np"])
        picked = sample(pool, TRAIN_PER_INTENT + EVAL_PER_INTENT, rng, name)
        rng.shuffle(picked)
        train = sorted(picked[:TRAIN_PER_INTENT])
        evals = sorted(picked[TRAIN_PER_INTENT:])
        intents.append({"name": name, "entry_dialog": spec["dialog"], "training_utterances": train})
        held_out[name] = evals
    bot = {
        "schema_version": 1,
        "name": "template_bot",
        "dialogs": dialogs(),
        "intents": intents,
        "entities": [
            {"name": "Email", "kind": "email"},
            {"name": "FullName", "kind": "free_text"},
            {"name": "ProductLine", "kind": "enumeration", "values": ["Laptops", "Phones", "Accessories"]},
            {"name": "CaseNumber", "kind": "alphanumeric_id"},
            {"name": "OrderNumber", "kind": "number"},
            {"name": "IssueDescription", "kind": "free_text"},
        ],
        "success_dialogs": ["End_Chat"],
    }
    (out / "template_bot.json").write_text(json.dumps(bot, indent=2) + "\n")
    (out / "template_bot.eval.json").write_text(json.dumps(held_out, indent=2) + "\n")


if __name__ == "__main__":
    main()

"""Writes data/sample_incidents.csv: synthetic workplace incident reports."""
import csv
import random
import sys

SCENES = [
    ("operaio caduto dalla scala durante la manutenzione del tetto", "frattura del polso e contusione alla spalla"),
    ("lavoratore scivolato sul pavimento bagnato del magazzino", "contusione al ginocchio e distorsione della caviglia"),
    ("operaio colpito da un carico sospeso durante il sollevamento con la gru", "trauma cranico e frattura della clavicola"),
    ("mano schiacciata tra i rulli della pressa durante la pulizia", "amputazione del dito e ferita alla mano"),
    ("tecnico folgorato durante la riparazione del quadro elettrico", "ustione alla mano e arresto cardiaco"),
    ("addetto investito dal carrello elevatore nel piazzale", "frattura della gamba e trauma al bacino"),
    ("operaio ferito dalla lama della sega circolare", "ferita profonda alla mano e lesione del tendine"),
    ("lavoratore caduto dal ponteggio durante il montaggio", "frattura vertebrale e trauma cranico"),
    ("schizzo di acido negli occhi durante il travaso", "ustione chimica all'occhio"),
    ("operaio inalato fumi tossici nel serbatoio", "intossicazione e perdita di coscienza"),
]
EXTRA = ["nel cantiere", "in officina", "durante il turno di notte", "senza casco", "senza guanti",
         "vicino alla macchina", "presso lo stabilimento", "in presenza del preposto"]


def main(path):
    rng = random.Random(7)
    rows = []
    for i in range(80):
        dyn, cons = SCENES[i % len(SCENES)] if i < 40 else rng.choice(SCENES)
        extra = " ".join(rng.sample(EXTRA, rng.randint(0, 2)))
        rows.append((f"INC{i + 1:03d}", f"{dyn} {extra}".strip(), cons))
    rows.append(("INC081", "ND", "nessuna"))
    rows.append(("INC082", "-", ""))
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "dynamics", "consequence"])
        w.writerows(rows)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/sample_incidents.csv")

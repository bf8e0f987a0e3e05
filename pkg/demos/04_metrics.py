"""Macro-averaged metrics on the published confusion counts."""
import math

from iotcti.metrics import ConfusionMatrix, format_table, macro_metrics

rf = macro_metrics(ConfusionMatrix(tp=218, fp=255, fn=29, tn=3698))
print(format_table([(("Random Forest", "No CVE"), rf)]))
print(rf.per_class)

# the published row keeps four digits by cutting, not rounding
print([math.floor(x * 1e4) / 1e4 for x in (rf.f1, rf.precision, rf.recall, rf.accuracy)])

# which matrices fit 119 predicted related / 2,007 predicted unrelated,
# F1 0.67 and accuracy 0.95?
fits = []
for tp in range(120):
    for fn in range(2008):
        r = macro_metrics(ConfusionMatrix(tp, 119 - tp, fn, 2007 - fn))
        if round(r.f1, 2) == 0.67 and round(r.accuracy, 2) == 0.95:
            fits.append((tp, fn, r))
print(len(fits), "matrices fit")
print(min(r.precision for *_, r in fits), max(r.precision for *_, r in fits))
print(min(r.recall for *_, r in fits), max(r.recall for *_, r in fits))

mon = macro_metrics(ConfusionMatrix(30, 89, 15, 1992))
print(format_table([(("Monitor", "replay"), mon)]))

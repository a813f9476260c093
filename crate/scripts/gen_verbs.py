#!/usr/bin/env python3
"""Write crates/core/data/verbs.txt: common English verbs with their inflections."""

import pathlib

REGULAR = """
accept accuse achieve act add admire admit adopt advise afford agree aim allow
announce annoy answer apologize appear apply approach argue arrange arrest arrive
ask attack attempt attend avoid bake ban bathe battle beg behave belong betray
blame bless boil borrow bother bounce breathe burn bury call calm care carry
cause celebrate challenge change charge chase cheat check cheer chew chase choke
claim clean climb close collapse collect comb command complain confess confuse
consider contain continue control convince cook copy correct cough count cover
crash crawl create cross crush cry cure dance dare decide declare defend deliver
demand deny depend describe deserve destroy develop die disagree disappear
discover dislike divide divorce drag dress drop drown earn educate employ end
enjoy enter escape establish examine excuse exist expect explain explode face
fail fancy fear fill finish fire fix float flood follow force forgive form free
frighten gather gaze glance grab greet guard guess hammer hand handle hang happen
harm hate head heal help hide hire hope hug hunt hurry identify ignore imagine
improve include inform inherit injure insist inspire intend interrupt introduce
invent invite jail join joke judge jump kick kill kiss knock label land last
laugh launch learn lie like list listen live locate look love manage marry match
matter mention miss mix move murder name need note notice obey observe obtain
offer open order own paint park pass pause perform persuade pick place plan plant
play please poison pour pray prefer prepare present pretend prevent print promise
protect prove pull punish push question race rain raise reach receive recognize
record recover refuse regret reject release rely remain remember remind remove
rent repair repeat replace reply report rescue rest retire return reveal rob
rescue ruin rush sail save scare scream search seem serve settle share shock
shout sign signal smash smile smoke sneeze solve sound spare spell spoil start
starve stay step stop study succeed suffer suggest supply support suppose
surprise surrender survive suspect talk taste tease telephone tempt terrify
thank threaten tie touch trade train transform trap travel treat trick trust try
turn underline undress unite unlock use vanish visit vote wait walk wander want
warn wash watch wave welcome whisper wish wonder work worry wound wrap yell
""".split()

IRREGULAR = """
arise arose arisen
awake awoke awoken
be was were been is am are being
bear bore born borne
beat beat beaten
become became become
begin began begun
bend bent
bet bet
bite bit bitten
bleed bled
blow blew blown
break broke broken
bring brought
build built
burst burst
buy bought
catch caught
choose chose chosen
come came come
cost cost
creep crept
cut cut
deal dealt
dig dug
do did done does doing
draw drew drawn
dream dreamt dreamed
drink drank drunk
drive drove driven
eat ate eaten
fall fell fallen
feed fed
feel felt
fight fought
find found
flee fled
fly flew flown
forbid forbade forbidden
forget forgot forgotten
freeze froze frozen
get got gotten
give gave given
go went gone goes
grow grew grown
have had has having
hear heard
hit hit
hold held
hurt hurt
keep kept
kneel knelt
know knew known
lay laid
lead led
leave left
lend lent
let let
lose lost
make made
mean meant
meet met
pay paid
put put
quit quit
read read
ride rode ridden
ring rang rung
rise rose risen
run ran run
say said
see saw seen
seek sought
sell sold
send sent
set set
shake shook shaken
shoot shot
shut shut
sing sang sung
sink sank sunk
sit sat
sleep slept
slide slid
speak spoke spoken
spend spent
spin spun
split split
spread spread
stand stood
steal stole stolen
stick stuck
sting stung
strike struck
swear swore sworn
sweep swept
swim swam swum
swing swung
take took taken
teach taught
tear tore torn
tell told
think thought
throw threw thrown
understand understood
wake woke woken
wear wore worn
weep wept
win won
write wrote written
""".strip().splitlines()

VOWELS = set("aeiou")


def third_person(v):
    if v.endswith(("s", "sh", "ch", "x", "z", "o")):
        return v + "es"
    if v.endswith("y") and v[-2] not in VOWELS:
        return v[:-1] + "ies"
    return v + "s"


def doubles_final(v):
    # short cvc stems (stop, plan, drop) double the final consonant
    return (
        len(v) >= 3
        and v[-1] not in VOWELS | set("wxy")
        and v[-2] in VOWELS
        and v[-3] not in VOWELS
        and sum(c in VOWELS for c in v) == 1
    )


def past(v):
    if v.endswith("e"):
        return v + "d"
    if v.endswith("y") and v[-2] not in VOWELS:
        return v[:-1] + "ied"
    if doubles_final(v):
        return v + v[-1] + "ed"
    return v + "ed"


def gerund(v):
    if v.endswith("ie"):
        return v[:-2] + "ying"
    if v.endswith("e") and not v.endswith(("ee", "ye", "oe")):
        return v[:-1] + "ing"
    if doubles_final(v):
        return v + v[-1] + "ing"
    return v + "ing"


def main():
    words = set()
    for v in REGULAR:
        words.update({v, third_person(v), past(v), gerund(v)})
    for line in IRREGULAR:
        forms = line.split()
        base = forms[0]
        words.update(forms)
        if base not in ("be", "do", "go", "have"):
            words.update({third_person(base), gerund(base)})
    out = pathlib.Path(__file__).resolve().parent.parent / "crates/core/data/verbs.txt"
    lines = ["# common English verbs and inflections, generated by scripts/gen_verbs.py"]
    lines += sorted(words)
    out.write_text("\n".join(lines) + "\n")
    print(f"{len(words)} forms -> {out}")


if __name__ == "__main__":
    main()

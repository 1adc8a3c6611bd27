// Small string table honoring the user's locale tag.

const TABLE: Record<string, Record<string, string>> = {
  en: {
    login: "Log in",
    username: "Username",
    password: "Password",
    scrapbook: "Scrapbook",
    session: "Group session",
    dashboard: "Dashboard",
    shared: "Group shared construction",
    sandbox: "My sandbox",
    chat: "Chat",
    requestLock: "Request lock",
    releaseLock: "Release lock",
    youHold: "You hold the lock",
    holder: "lock held by",
    queued: "queued at position",
    saveSandbox: "Save sandbox to scrapbook",
    observer: "observer",
    forceTransfer: "Give lock",
    undefinedSteps: "Undefined steps",
  },
  pt: {
    login: "Entrar",
    username: "Utilizador",
    password: "Senha",
    scrapbook: "Caderno",
    session: "Sessão de grupo",
    dashboard: "Painel",
    shared: "Construção partilhada do grupo",
    sandbox: "Meu rascunho",
    chat: "Conversa",
    requestLock: "Pedir bloqueio",
    releaseLock: "Libertar bloqueio",
    youHold: "Tem o bloqueio",
    holder: "bloqueio de",
    queued: "na fila, posição",
    saveSandbox: "Guardar rascunho no caderno",
    observer: "observador",
    forceTransfer: "Dar bloqueio",
    undefinedSteps: "Passos indefinidos",
  },
  sr: {
    login: "Prijava",
    username: "Korisnik",
    password: "Lozinka",
    scrapbook: "Sveska",
    session: "Grupna sesija",
    dashboard: "Tabla",
    shared: "Zajednička konstrukcija grupe",
    sandbox: "Moja skica",
    chat: "Ćaskanje",
    requestLock: "Traži ključ",
    releaseLock: "Pusti ključ",
    youHold: "Ključ je kod tebe",
    holder: "ključ drži",
    queued: "u redu, pozicija",
    saveSandbox: "Sačuvaj skicu u svesku",
    observer: "posmatrač",
    forceTransfer: "Dodeli ključ",
    undefinedSteps: "Nedefinisani koraci",
  },
};

let active = "en";

export function setLocale(tag: string): void {
  active = tag in TABLE ? tag : "en";
}

export function t(key: string): string {
  return TABLE[active][key] ?? TABLE.en[key] ?? key;
}

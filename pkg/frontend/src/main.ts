// Bootstrap: read the connection settings from a small login form, then run
// the single-page task loop.

import { ApiClient } from './api'
import { App } from './app'
import { AnnotationSession } from './session'

function start(): void {
  const root = document.getElementById('app')
  if (!root) throw new Error('missing #app container')
  root.innerHTML = `
    <form class="login">
      <h1>Annotation sign-in</h1>
      <label>Service URL <input name="base" value="" placeholder="http://127.0.0.1:8080" /></label>
      <label>Annotator id <input name="annotator" required /></label>
      <label>Access token <input name="token" type="password" required /></label>
      <button type="submit">Start judging</button>
      <p class="login-error"></p>
    </form>
  `
  const form = root.querySelector('form') as HTMLFormElement
  form.addEventListener('submit', (event) => {
    event.preventDefault()
    const data = new FormData(form)
    const base = String(data.get('base') ?? '')
    const annotator = String(data.get('annotator') ?? '')
    const token = String(data.get('token') ?? '')
    const api = new ApiClient(base, token, annotator)
    const session = new AnnotationSession(api, window.localStorage, annotator)
    const app = new App(root, api, session)
    app.run().catch((error: unknown) => {
      const message = root.querySelector('.login-error')
      if (message) message.textContent = `sign-in failed: ${String(error)}`
      start()
      const again = root.querySelector('.login-error')
      if (again) again.textContent = `sign-in failed: ${String(error)}`
    })
  })
}

start()
